#include "tdvae/checkpoint.hpp"

#include <cmath>
#include <string>

#include "tdvae/binary_io.hpp"
#include "tdvae/error.hpp"

namespace tdvae {

namespace {

constexpr std::string_view kMagic = "TDVAE1";
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxWidth = 1u << 24;

void write_layout(ByteWriter& w, const DenseNetwork& net) {
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    for (const DenseLayer& l : net.layers()) {
        w.u32(static_cast<std::uint32_t>(l.in_dim()));
        w.u32(static_cast<std::uint32_t>(l.out_dim()));
        w.u8(static_cast<std::uint8_t>(l.activation));
    }
}

std::vector<DenseLayer> read_layout(ByteReader& r) {
    const std::uint32_t count = r.u32();
    if (count == 0 || count > kMaxLayers) {
        throw ParseError("checkpoint: implausible layer count " + std::to_string(count));
    }
    std::vector<DenseLayer> layers(count);
    for (DenseLayer& l : layers) {
        const std::uint32_t in = r.u32();
        const std::uint32_t out = r.u32();
        const std::uint8_t act = r.u8();
        if (in == 0 || out == 0 || in > kMaxWidth || out > kMaxWidth) {
            throw ParseError("checkpoint: implausible layer width");
        }
        if (act > static_cast<std::uint8_t>(Activation::tanh)) {
            throw ParseError("checkpoint: unknown activation tag " + std::to_string(act));
        }
        l.activation = static_cast<Activation>(act);
        l.weight.rows = out;
        l.weight.cols = in;
    }
    return layers;
}

void read_params(ByteReader& r, std::vector<DenseLayer>& layers) {
    for (DenseLayer& l : layers) {
        const std::size_t n = l.weight.rows * l.weight.cols;
        if (r.remaining() < (n + l.weight.rows) * 8) {
            throw ParseError("checkpoint: parameter payload truncated");
        }
        l.weight.data.resize(n);
        for (double& v : l.weight.data) {
            v = r.f64();
        }
        l.bias.resize(l.weight.rows);
        for (double& v : l.bias) {
            v = r.f64();
        }
        for (double v : l.weight.data) {
            if (!std::isfinite(v)) {
                throw ParseError("checkpoint: non-finite parameter");
            }
        }
    }
}

} // namespace

std::vector<std::uint8_t> serialize_model(const VaeModel& model) {
    ByteWriter w;
    w.bytes(kMagic);
    w.u8(static_cast<std::uint8_t>(model.latent().mode));
    w.u32(static_cast<std::uint32_t>(model.latent().size));
    w.u32(static_cast<std::uint32_t>(model.input_dim()));
    write_layout(w, model.encoder());
    write_layout(w, model.decoder());
    for (const DenseNetwork* net : {&model.encoder(), &model.decoder()}) {
        for (auto block : net->parameter_blocks()) {
            for (double v : block) {
                w.f64(v);
            }
        }
    }
    return w.buffer();
}

VaeModel deserialize_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
        throw ParseError("checkpoint: bad magic, expected TDVAE1");
    }
    const std::uint8_t mode = r.u8();
    if (mode > static_cast<std::uint8_t>(LatentMode::euclidean)) {
        throw ParseError("checkpoint: unknown latent mode " + std::to_string(mode));
    }
    LatentSpec latent{static_cast<LatentMode>(mode), r.u32()};
    const std::uint32_t input_dim = r.u32();
    std::vector<DenseLayer> enc = read_layout(r);
    std::vector<DenseLayer> dec = read_layout(r);
    read_params(r, enc);
    read_params(r, dec);
    if (r.remaining() != 0) {
        throw ParseError("checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
    }
    try {
        VaeModel model(latent, DenseNetwork(std::move(enc)), DenseNetwork(std::move(dec)));
        if (model.input_dim() != input_dim) {
            throw ParseError("checkpoint: header input dimension disagrees with the encoder");
        }
        return model;
    } catch (const ShapeError& e) {
        throw ParseError(std::string("checkpoint: inconsistent layout: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: inconsistent layout: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model) {
    write_file_atomic(path, serialize_model(model));
}

VaeModel load_checkpoint(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    try {
        return deserialize_model(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace tdvae
