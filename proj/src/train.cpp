#include "tdvae/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "tdvae/error.hpp"

namespace tdvae {

void TrainConfig::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw ConfigError("beta must be finite and >= 0");
    }
    if (batch_size == 0) {
        throw ConfigError("batch_size must be >= 1");
    }
    if (epochs == 0) {
        throw ConfigError("epochs must be >= 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (latent.size == 0) {
        throw ConfigError("latent size must be positive");
    }
    if (latent.mode == LatentMode::torus && latent.size > 16) {
        throw ConfigError("torus latent supports at most 16 circles");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in (0, 1)");
    }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double holdout_fraction,
                                                                            std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto holdout = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
    std::vector<std::size_t> train(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(holdout));
    std::vector<std::size_t> hold(idx.end() - static_cast<std::ptrdiff_t>(holdout), idx.end());
    return {std::move(train), std::move(hold)};
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = m.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

double validation_mse(const VaeModel& model, const Matrix& samples) {
    // Chunked so large validation sets do not allocate whole-set activations.
    constexpr std::size_t kChunk = 512;
    double total = 0.0;
    for (std::size_t start = 0; start < samples.rows; start += kChunk) {
        const std::size_t end = std::min(samples.rows, start + kChunk);
        std::vector<std::size_t> rows(end - start);
        std::iota(rows.begin(), rows.end(), start);
        const Matrix chunk = gather_rows(samples, rows);
        total += mean_squared_error(model.reconstruct(chunk), chunk) * static_cast<double>(chunk.data.size());
    }
    return total / static_cast<double>(samples.data.size());
}

TrainReport train(const TrainConfig& config, const Matrix& samples, const EpochCallback& on_epoch) {
    config.validate();
    if (samples.rows < 2) {
        throw ConfigError("training needs at least two samples, got " + std::to_string(samples.rows));
    }
    auto [train_rows, val_rows] = split_indices(samples.rows, config.validation_fraction, config.seed);
    if (train_rows.empty() || val_rows.empty()) {
        throw ConfigError("dataset too small for a train/validation split");
    }
    const Matrix val = gather_rows(samples, val_rows);

    ModelShape shape;
    shape.input_dim = samples.cols;
    shape.encoder_hidden = config.encoder_hidden;
    shape.decoder_hidden = config.decoder_hidden;
    VaeModel model = VaeModel::make(config.latent, shape, config.seed);

    std::vector<std::size_t> block_sizes;
    for (auto b : model.encoder().parameter_blocks()) {
        block_sizes.push_back(b.size());
    }
    for (auto b : model.decoder().parameter_blocks()) {
        block_sizes.push_back(b.size());
    }
    Adam adam(AdamConfig{.learning_rate = config.learning_rate}, block_sizes);

    // Separate streams for batch order and reparameterization noise.
    std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 noise_rng(config.seed ^ 0xc2b2ae3d27d4eb4fULL);

    TrainReport report;
    report.initial_validation_mse = validation_mse(model, val);
    report.best_validation_mse = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(train_rows.begin(), train_rows.end(), order_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
            const std::size_t end = std::min(train_rows.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(train_rows.data() + start, end - start);
            const Matrix batch = gather_rows(samples, rows);
            const Matrix noise = draw_noise(batch.rows, config.latent, noise_rng);
            ElboResult r = elbo_loss(model, batch, config.beta, noise);

            std::vector<std::span<double>> params = model.encoder().parameter_blocks();
            for (auto b : model.decoder().parameter_blocks()) {
                params.push_back(b);
            }
            std::vector<std::span<double>> grads = r.encoder_grads.blocks();
            for (auto b : r.decoder_grads.blocks()) {
                grads.push_back(b);
            }
            adam.step(params, grads);
            loss_sum += r.value.loss;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(batches);
        rec.validation_mse = validation_mse(model, val);
        if (!std::isfinite(rec.validation_mse)) {
            throw NumericError("validation MSE is not finite at epoch " + std::to_string(epoch));
        }
        report.history.push_back(rec);
        if (rec.validation_mse < report.best_validation_mse) {
            report.best_validation_mse = rec.validation_mse;
            report.best_epoch = epoch;
            report.model = model;
        }
        if (on_epoch) {
            on_epoch(rec);
        }
    }
    return report;
}

} // namespace tdvae
