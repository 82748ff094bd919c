#include "tdvae/vae.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "tdvae/error.hpp"

namespace tdvae {

std::string_view to_string(LatentMode m) { return m == LatentMode::torus ? "torus" : "euclidean"; }

namespace {

// Column of circle a, component alpha, in the raw encoder output.
std::size_t torus_mu_col(std::size_t a, std::size_t alpha) { return 4 * a + alpha; }
std::size_t torus_logvar_col(std::size_t a, std::size_t alpha) { return 4 * a + 2 + alpha; }

EncoderOutput split_encoder_output(const LatentSpec& latent, const Matrix& raw) {
    const std::size_t rows = raw.rows;
    const std::size_t width = latent.noise_size();
    EncoderOutput out;
    out.latent = latent;
    out.mu = Matrix(rows, width);
    out.logvar = Matrix(rows, width);
    out.sigma = Matrix(rows, width);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < width; ++j) {
            std::size_t mu_col = j;
            std::size_t lv_col = latent.size + j;
            if (latent.mode == LatentMode::torus) {
                mu_col = torus_mu_col(j / 2, j % 2);
                lv_col = torus_logvar_col(j / 2, j % 2);
            }
            out.mu(r, j) = raw(r, mu_col);
            out.logvar(r, j) = raw(r, lv_col);
            out.sigma(r, j) = std::exp(0.5 * raw(r, lv_col));
        }
    }
    return out;
}

void check_batch(const VaeModel& model, const Matrix& batch, const Matrix& noise) {
    if (batch.cols != model.input_dim()) {
        throw ShapeError("batch has " + std::to_string(batch.cols) + " columns, model expects " +
                         std::to_string(model.input_dim()));
    }
    if (batch.rows == 0) {
        throw ShapeError("empty batch");
    }
    if (noise.rows != batch.rows || noise.cols != model.latent().noise_size()) {
        throw ShapeError("noise must be " + std::to_string(batch.rows) + "x" +
                         std::to_string(model.latent().noise_size()));
    }
}

struct Forward {
    ForwardCache enc_cache;
    ForwardCache dec_cache;
    EncoderOutput enc;
    Matrix latent;
    Matrix output;
    std::vector<double> recon;  // per sample
    std::vector<double> kl;     // per sample
};

Forward run_forward(const VaeModel& model, const Matrix& batch, const Matrix& noise, bool keep_cache) {
    check_batch(model, batch, noise);
    Forward f;
    const Matrix raw = keep_cache ? model.encoder().forward(batch, f.enc_cache) : model.encoder().forward(batch);
    f.enc = split_encoder_output(model.latent(), raw);
    f.latent = model.sample_latent(f.enc, noise);
    f.output = keep_cache ? model.decoder().forward(f.latent, f.dec_cache) : model.decoder().forward(f.latent);

    const std::size_t rows = batch.rows;
    f.recon.assign(rows, 0.0);
    f.kl.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double se = 0.0;
        for (std::size_t k = 0; k < batch.cols; ++k) {
            const double d = f.output(r, k) - batch(r, k);
            se += d * d;
        }
        f.recon[r] = se;
        double kl = 0.0;
        for (std::size_t j = 0; j < f.enc.mu.cols; ++j) {
            kl += gaussian_kl_component(f.enc.mu(r, j), f.enc.sigma(r, j));
        }
        f.kl[r] = kl;
    }
    return f;
}

LossBreakdown summarize(const Forward& f, double beta, const Matrix& batch) {
    LossBreakdown out;
    const double n = static_cast<double>(f.recon.size());
    for (std::size_t r = 0; r < f.recon.size(); ++r) {
        out.reconstruction += f.recon[r];
        out.kl += f.kl[r];
    }
    out.reconstruction /= n;
    out.kl /= n;
    out.loss = out.reconstruction + beta * out.kl;
    if (!std::isfinite(out.loss)) {
        double max_abs = 0.0;
        for (double v : batch.data) {
            max_abs = std::max(max_abs, std::fabs(v));
        }
        std::ostringstream msg;
        msg << "non-finite loss: reconstruction=" << out.reconstruction << " kl=" << out.kl
            << " batch_rows=" << batch.rows << " max|x|=" << max_abs;
        throw NumericError(msg.str());
    }
    return out;
}

} // namespace

std::vector<CircleGaussian> EncoderOutput::circles(std::size_t row) const {
    if (latent.mode != LatentMode::torus) {
        throw ShapeError("circle parameters requested from a Euclidean encoder output");
    }
    std::vector<CircleGaussian> out(latent.size);
    for (std::size_t a = 0; a < latent.size; ++a) {
        out[a] = {mu(row, 2 * a), mu(row, 2 * a + 1), sigma(row, 2 * a), sigma(row, 2 * a + 1)};
    }
    return out;
}

VaeModel::VaeModel(LatentSpec latent, DenseNetwork encoder, DenseNetwork decoder)
    : latent_(latent), encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
    if (latent_.size == 0) {
        throw ConfigError("latent size must be positive");
    }
    if (latent_.mode == LatentMode::torus && latent_.size > 16) {
        throw ConfigError("torus latent supports at most 16 circles");
    }
    if (encoder_.output_dim() != latent_.encoder_outputs()) {
        throw ShapeError("encoder emits " + std::to_string(encoder_.output_dim()) + " values, latent needs " +
                         std::to_string(latent_.encoder_outputs()));
    }
    if (decoder_.input_dim() != latent_.decoder_inputs()) {
        throw ShapeError("decoder takes " + std::to_string(decoder_.input_dim()) + " values, latent provides " +
                         std::to_string(latent_.decoder_inputs()));
    }
    if (decoder_.output_dim() != encoder_.input_dim()) {
        throw ShapeError("decoder output does not match encoder input");
    }
}

VaeModel VaeModel::make(LatentSpec latent, const ModelShape& shape, std::uint64_t seed) {
    if (shape.input_dim == 0) {
        throw ConfigError("input dimension must be positive");
    }
    if (latent.size == 0) {
        throw ConfigError("latent size must be positive");
    }
    // Distinct streams for the two networks.
    DenseNetwork enc = DenseNetwork::make(shape.input_dim, shape.encoder_hidden, latent.encoder_outputs(),
                                          Activation::relu, Activation::identity, seed * 2 + 1);
    DenseNetwork dec = DenseNetwork::make(latent.decoder_inputs(), shape.decoder_hidden, shape.input_dim,
                                          Activation::relu, Activation::tanh, seed * 2 + 2);
    return VaeModel(latent, std::move(enc), std::move(dec));
}

EncoderOutput VaeModel::encode(const Matrix& x) const {
    return split_encoder_output(latent_, encoder_.forward(x));
}

Matrix VaeModel::decode(const Matrix& latents) const {
    if (latents.cols != latent_.decoder_inputs()) {
        throw ShapeError("decode: latent has " + std::to_string(latents.cols) + " values, expected " +
                         std::to_string(latent_.decoder_inputs()));
    }
    return decoder_.forward(latents);
}

Matrix VaeModel::mean_latent(const EncoderOutput& enc) const {
    const std::size_t rows = enc.mu.rows;
    if (latent_.mode == LatentMode::euclidean) {
        return enc.mu;
    }
    Matrix out(rows, latent_.decoder_inputs());
    std::vector<CircleTuple> tuples(latent_.size);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t a = 0; a < latent_.size; ++a) {
            tuples[a] = normalize_pair(enc.mu(r, 2 * a), enc.mu(r, 2 * a + 1));
        }
        const std::vector<double> v = embed(tuples).flat();
        std::copy(v.begin(), v.end(), out.row(r).begin());
    }
    return out;
}

Matrix VaeModel::sample_latent(const EncoderOutput& enc, const Matrix& noise) const {
    const std::size_t rows = enc.mu.rows;
    if (noise.rows != rows || noise.cols != latent_.noise_size()) {
        throw ShapeError("sample_latent: noise shape mismatch");
    }
    Matrix out(rows, latent_.decoder_inputs());
    if (latent_.mode == LatentMode::euclidean) {
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            out.data[i] = enc.mu.data[i] + enc.sigma.data[i] * noise.data[i];
        }
        return out;
    }
    std::vector<CircleTuple> tuples(latent_.size);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t a = 0; a < latent_.size; ++a) {
            const CircleGaussian p{enc.mu(r, 2 * a), enc.mu(r, 2 * a + 1), enc.sigma(r, 2 * a),
                                   enc.sigma(r, 2 * a + 1)};
            tuples[a] = sample_circle(p, noise(r, 2 * a), noise(r, 2 * a + 1));
        }
        const std::vector<double> v = embed(tuples).flat();
        std::copy(v.begin(), v.end(), out.row(r).begin());
    }
    return out;
}

Matrix VaeModel::reconstruct(const Matrix& x) const { return decode(mean_latent(encode(x))); }

Matrix VaeModel::codes(const Matrix& x) const {
    const EncoderOutput enc = encode(x);
    if (latent_.mode == LatentMode::euclidean) {
        return enc.mu;
    }
    Matrix out(x.rows, latent_.size);
    std::vector<CircleTuple> tuples(latent_.size);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t a = 0; a < latent_.size; ++a) {
            tuples[a] = normalize_pair(enc.mu(r, 2 * a), enc.mu(r, 2 * a + 1));
        }
        const AngleVector angles = recover_angles(embed(tuples));
        for (std::size_t a = 0; a < latent_.size; ++a) {
            out(r, a) = angles[a];
        }
    }
    return out;
}

std::vector<double> VaeModel::generate(const AngleVector& angles) const {
    if (latent_.mode != LatentMode::torus) {
        throw ShapeError("generate needs a torus model");
    }
    if (angles.size() != latent_.size) {
        throw ShapeError("generate: expected " + std::to_string(latent_.size) + " angles, got " +
                         std::to_string(angles.size()));
    }
    const std::vector<double> v = embed(angles).flat();
    Matrix z(1, v.size());
    z.data = v;
    return decode(z).data;
}

Matrix draw_noise(std::size_t rows, const LatentSpec& latent, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(rows, latent.noise_size());
    for (double& v : out.data) {
        v = normal(rng);
    }
    return out;
}

LossBreakdown elbo_value(const VaeModel& model, const Matrix& batch, double beta, const Matrix& noise) {
    const Forward f = run_forward(model, batch, noise, false);
    return summarize(f, beta, batch);
}

ElboResult elbo_loss(const VaeModel& model, const Matrix& batch, double beta, const Matrix& noise) {
    Forward f = run_forward(model, batch, noise, true);
    ElboResult result;
    result.value = summarize(f, beta, batch);

    const LatentSpec& latent = model.latent();
    const std::size_t rows = batch.rows;
    const double inv_n = 1.0 / static_cast<double>(rows);

    Matrix grad_out(rows, batch.cols);
    for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
        grad_out.data[i] = 2.0 * (f.output.data[i] - batch.data[i]) * inv_n;
    }
    result.decoder_grads = model.decoder().make_gradients();
    const Matrix grad_latent = model.decoder().backward(f.dec_cache, grad_out, result.decoder_grads);

    // d(loss)/d(mu) and d(loss)/d(logvar) in the compact (rows x noise_size) layout.
    Matrix grad_mu(rows, latent.noise_size());
    Matrix grad_logvar(rows, latent.noise_size());
    if (latent.mode == LatentMode::euclidean) {
        for (std::size_t i = 0; i < grad_mu.data.size(); ++i) {
            const double g = grad_latent.data[i];
            grad_mu.data[i] = g;
            grad_logvar.data[i] = g * noise.data[i] * 0.5 * f.enc.sigma.data[i];
        }
    } else {
        const std::size_t dim = latent.size;
        std::vector<CircleTuple> tuples(dim);
        std::vector<CircleTuple> grad_tuples(dim);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t a = 0; a < dim; ++a) {
                const double x0 = f.enc.mu(r, 2 * a) + f.enc.sigma(r, 2 * a) * noise(r, 2 * a);
                const double x1 = f.enc.mu(r, 2 * a + 1) + f.enc.sigma(r, 2 * a + 1) * noise(r, 2 * a + 1);
                tuples[a] = normalize_pair(x0, x1);
            }
            embed_vjp(tuples, grad_latent.row(r), grad_tuples);
            for (std::size_t a = 0; a < dim; ++a) {
                const double x0 = f.enc.mu(r, 2 * a) + f.enc.sigma(r, 2 * a) * noise(r, 2 * a);
                const double x1 = f.enc.mu(r, 2 * a + 1) + f.enc.sigma(r, 2 * a + 1) * noise(r, 2 * a + 1);
                const CircleTuple g = normalize_pair_vjp(x0, x1, grad_tuples[a]);
                const double graw[2] = {g.m0, g.m1};
                for (std::size_t alpha = 0; alpha < 2; ++alpha) {
                    const std::size_t j = 2 * a + alpha;
                    grad_mu(r, j) = graw[alpha];
                    grad_logvar(r, j) = graw[alpha] * noise(r, j) * 0.5 * f.enc.sigma(r, j);
                }
            }
        }
    }
    if (beta != 0.0) {
        const double scale = beta * inv_n;
        for (std::size_t i = 0; i < grad_mu.data.size(); ++i) {
            const double s = f.enc.sigma.data[i];
            grad_mu.data[i] += scale * f.enc.mu.data[i];
            grad_logvar.data[i] += scale * 0.5 * (s * s - 1.0);
        }
    }

    Matrix grad_enc(rows, latent.encoder_outputs());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < latent.noise_size(); ++j) {
            std::size_t mu_col = j;
            std::size_t lv_col = latent.size + j;
            if (latent.mode == LatentMode::torus) {
                mu_col = torus_mu_col(j / 2, j % 2);
                lv_col = torus_logvar_col(j / 2, j % 2);
            }
            grad_enc(r, mu_col) = grad_mu(r, j);
            grad_enc(r, lv_col) = grad_logvar(r, j);
        }
    }
    result.encoder_grads = model.encoder().make_gradients();
    model.encoder().backward(f.enc_cache, grad_enc, result.encoder_grads);
    return result;
}

double mean_squared_error(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw ShapeError("mean_squared_error: shape mismatch");
    }
    if (a.data.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

} // namespace tdvae
