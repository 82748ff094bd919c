#include "tdvae/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "tdvae/binary_io.hpp"
#include "tdvae/checkpoint.hpp"
#include "tdvae/error.hpp"

namespace tdvae {

namespace fs = std::filesystem;

namespace {

const nlohmann::json& block(const nlohmann::json& j, const char* name) {
    if (!j.contains(name) || !j.at(name).is_object()) {
        throw ConfigError(std::string("config: missing '") + name + "' block");
    }
    return j.at(name);
}

std::uint64_t required_seed(const nlohmann::json& j, const char* block_name, const char* key) {
    if (!j.contains(key)) {
        throw ConfigError(std::string("config: ") + block_name + "." + key +
                          " is required (seeds are never defaulted)");
    }
    if (!j.at(key).is_number_unsigned() && !(j.at(key).is_number_integer() && j.at(key).get<std::int64_t>() >= 0)) {
        throw ConfigError(std::string("config: ") + block_name + "." + key + " must be a non-negative integer");
    }
    return j.at(key).get<std::uint64_t>();
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

fs::path dataset_path(const CommandPaths& p) { return p.dataset.empty() ? p.out_dir / "dataset.tdds" : p.dataset; }

fs::path checkpoint_path(const CommandPaths& p) {
    return p.checkpoint.empty() ? p.out_dir / "model.tdvae" : p.checkpoint;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void check_dataset_matches(const Dataset& ds, const DatasetConfig& cfg) {
    const bool shapes = cfg.kind == "shapes2d";
    const std::size_t expected_dim = shapes ? cfg.width * cfg.height * 3 : cfg.output_dim;
    if (ds.sample_dim() != expected_dim) {
        throw ConfigError("dataset has samples of size " + std::to_string(ds.sample_dim()) +
                          " but the config describes size " + std::to_string(expected_dim));
    }
    if (ds.size() != cfg.size) {
        throw ConfigError("dataset has " + std::to_string(ds.size()) + " records but the config asks for " +
                          std::to_string(cfg.size));
    }
}

} // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config: top level must be a JSON object");
    }
    ExperimentConfig c;

    const auto& d = block(j, "dataset");
    c.dataset.kind = get_or<std::string>(d, "kind", "synthetic");
    if (c.dataset.kind != "synthetic" && c.dataset.kind != "shapes2d") {
        throw ConfigError("config: dataset.kind must be 'synthetic' or 'shapes2d'");
    }
    c.dataset.size = get_or<std::size_t>(d, "size", 4000);
    c.dataset.seed = required_seed(d, "dataset", "seed");
    c.dataset.width = get_or<std::size_t>(d, "width", 16);
    c.dataset.height = get_or<std::size_t>(d, "height", 16);
    c.dataset.factors = get_or<std::size_t>(d, "factors", 3);
    c.dataset.continuous = get_or<std::size_t>(d, "continuous", 0);
    c.dataset.noise = get_or<double>(d, "noise", 0.0);
    c.dataset.output_dim = get_or<std::size_t>(d, "output_dim", 16);
    if (c.dataset.size == 0) {
        throw ConfigError("config: dataset.size must be positive");
    }

    const auto& m = block(j, "model");
    const std::string mode = get_or<std::string>(m, "mode", "torus");
    if (mode == "torus") {
        c.model.latent.mode = LatentMode::torus;
    } else if (mode == "euclidean") {
        c.model.latent.mode = LatentMode::euclidean;
    } else {
        throw ConfigError("config: model.mode must be 'torus' or 'euclidean'");
    }
    c.model.latent.size = get_or<std::size_t>(m, "latent", 4);
    c.model.beta = get_or<double>(m, "beta", 1.0);
    c.model.learning_rate = get_or<double>(m, "learning_rate", 1e-4);
    c.model.batch_size = get_or<std::size_t>(m, "batch_size", 144);
    c.model.epochs = get_or<std::size_t>(m, "epochs", 50);
    c.model.seed = required_seed(m, "model", "seed");
    c.model.encoder_hidden = get_or<std::vector<std::size_t>>(m, "encoder_hidden", {256, 128});
    c.model.decoder_hidden = get_or<std::vector<std::size_t>>(m, "decoder_hidden", {128, 256});
    c.model.validation_fraction = get_or<double>(m, "validation_fraction", 0.2);
    c.model.validate();

    const auto& mt = block(j, "metrics");
    c.metrics.cv.alphas = get_or<std::vector<double>>(mt, "alphas", default_alpha_grid());
    c.metrics.cv.folds = get_or<std::size_t>(mt, "folds", 10);
    c.metrics.cv.seed = required_seed(mt, "metrics", "cv_seed");
    c.metrics.split_seed = required_seed(mt, "metrics", "split_seed");
    c.metrics.holdout_fraction = get_or<double>(mt, "holdout_fraction", 0.2);
    const std::string codes = get_or<std::string>(mt, "codes", "encoder");
    if (codes != "encoder" && codes != "factors") {
        throw ConfigError("config: metrics.codes must be 'encoder' or 'factors'");
    }
    c.codes_from_factors = codes == "factors";

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        c.sweep.betas = get_or<std::vector<double>>(s, "betas", c.sweep.betas);
        c.sweep.latents = get_or<std::vector<std::size_t>>(s, "latents", c.sweep.latents);
    }
    if (j.contains("traverse")) {
        const auto& t = j.at("traverse");
        c.traverse.circle = get_or<std::size_t>(t, "circle", 0);
        c.traverse.steps = get_or<std::size_t>(t, "steps", 16);
        c.traverse.anchor = get_or<std::vector<double>>(t, "anchor", {});
    }
    c.output_dir = get_or<std::string>(j, "output_dir", "");
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    try {
        return parse_config(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Dataset make_dataset(const DatasetConfig& config) {
    if (config.kind == "shapes2d") {
        return make_shapes_dataset(config.size, config.width, config.height, config.seed);
    }
    SyntheticOptions opt;
    opt.num_continuous = config.continuous;
    opt.noise = config.noise;
    opt.output_dim = config.output_dim;
    return synthetic_map_dataset(config.factors, config.size, config.seed, opt);
}

nlohmann::json to_json(const TrainReport& report, const TrainConfig& config) {
    nlohmann::json history = nlohmann::json::array();
    for (const EpochRecord& e : report.history) {
        history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_mse", e.validation_mse}});
    }
    return {
        {"mode", std::string(to_string(config.latent.mode))},
        {"latent", config.latent.size},
        {"beta", config.beta},
        {"learning_rate", config.learning_rate},
        {"batch_size", config.batch_size},
        {"epochs", config.epochs},
        {"seed", config.seed},
        {"initial_validation_mse", report.initial_validation_mse},
        {"best_epoch", report.best_epoch},
        {"best_validation_mse", report.best_validation_mse},
        {"history", history},
    };
}

std::vector<std::size_t> evaluation_rows(std::size_t n, const TrainConfig& config) {
    auto rows = split_indices(n, config.validation_fraction, config.seed).second;
    std::sort(rows.begin(), rows.end());
    return rows;
}

CodeFactorTable evaluation_table(const VaeModel& model, const Dataset& ds, const TrainConfig& config) {
    const std::vector<std::size_t> rows = evaluation_rows(ds.size(), config);
    const Matrix samples = gather_rows(training_samples(ds), rows);
    return {model.codes(samples), gather_rows(ds.factors, rows), false};
}

CellResult train_and_evaluate(const Dataset& ds, const TrainConfig& train_config, const MetricsConfig& metrics) {
    CellResult cell;
    cell.beta = train_config.beta;
    cell.latent = train_config.latent.size;
    const TrainReport report = train(train_config, training_samples(ds));
    cell.validation_mse = report.best_validation_mse;
    cell.best_epoch = report.best_epoch;
    cell.dci = evaluate_dci(evaluation_table(report.model, ds, train_config), metrics);
    cell.ok = true;
    return cell;
}

void cmd_generate(const ExperimentConfig& config, const CommandPaths& paths) {
    const Dataset ds = make_dataset(config.dataset);
    const fs::path out = dataset_path(paths);
    save_dataset(out, ds);
    fs::path sidecar = out;
    sidecar.replace_extension(".json");
    write_json(sidecar, {{"kind", config.dataset.kind},
                         {"size", ds.size()},
                         {"seed", config.dataset.seed},
                         {"width", ds.width},
                         {"height", ds.height},
                         {"channels", ds.channels},
                         {"factors", to_json(ds.spec)}});
}

void cmd_train(const ExperimentConfig& config, const CommandPaths& paths) {
    const Dataset ds = load_dataset(dataset_path(paths));
    check_dataset_matches(ds, config.dataset);
    // Only the samples are handed to training; the factors stay behind.
    const TrainReport report = train(config.model, training_samples(ds));
    save_checkpoint(checkpoint_path(paths), report.model);
    write_json(paths.out_dir / "train_report.json", to_json(report, config.model));
}

void cmd_evaluate(const ExperimentConfig& config, const CommandPaths& paths) {
    const Dataset ds = load_dataset(dataset_path(paths));
    check_dataset_matches(ds, config.dataset);
    CodeFactorTable table;
    if (config.codes_from_factors) {
        const std::vector<std::size_t> rows = evaluation_rows(ds.size(), config.model);
        table = {gather_rows(ds.factors, rows), gather_rows(ds.factors, rows), false};
    } else {
        const VaeModel model = load_checkpoint(checkpoint_path(paths));
        if (model.latent().mode != config.model.latent.mode) {
            throw ConfigError("checkpoint holds a " + std::string(to_string(model.latent().mode)) +
                              " model but the config asks for " + std::string(to_string(config.model.latent.mode)));
        }
        if (model.latent().size != config.model.latent.size) {
            throw ConfigError("checkpoint latent size " + std::to_string(model.latent().size) +
                              " differs from the config's " + std::to_string(config.model.latent.size));
        }
        if (model.input_dim() != ds.sample_dim()) {
            throw ConfigError("checkpoint expects samples of size " + std::to_string(model.input_dim()) +
                              ", dataset has " + std::to_string(ds.sample_dim()));
        }
        table = evaluation_table(model, ds, config.model);
    }
    const DciReport report = evaluate_dci(table, config.metrics);
    write_json(paths.out_dir / "dci_report.json", to_json(report));
    write_file_atomic(paths.out_dir / "importance.csv", importance_csv(report.importance));
    write_file_atomic(paths.out_dir / "heatmap.csv", heatmap_csv(table));
}

std::string sweep_csv(const std::vector<CellResult>& cells) {
    std::ostringstream out;
    out << "beta,latent,status,dc_score,disentanglement,completeness,informativeness,validation_mse,best_epoch\n";
    for (const CellResult& c : cells) {
        out << format_float(c.beta) << ',' << c.latent << ',' << (c.ok ? "ok" : "failed") << ',';
        if (c.ok) {
            out << format_float(c.dci.dc_score) << ',' << format_float(c.dci.disentanglement) << ','
                << format_float(c.dci.completeness) << ',' << format_float(c.dci.informativeness) << ','
                << format_float(c.validation_mse) << ',' << c.best_epoch;
        } else {
            out << "nan,nan,nan,nan,nan,0";
        }
        out << '\n';
    }
    return out.str();
}

std::vector<CellResult> cmd_sweep(const ExperimentConfig& config, const CommandPaths& paths, std::size_t workers) {
    if (config.sweep.betas.empty() || config.sweep.latents.empty()) {
        throw ConfigError("sweep: beta and latent grids must be non-empty");
    }
    const Dataset ds = make_dataset(config.dataset);

    std::vector<TrainConfig> cells;
    for (double beta : config.sweep.betas) {
        for (std::size_t latent : config.sweep.latents) {
            TrainConfig t = config.model;
            t.beta = beta;
            t.latent.size = latent;
            t.validate();
            cells.push_back(t);
        }
    }

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&](bool single) {
        if (!single) {
            set_kernel_threads(1);
        }
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = train_and_evaluate(ds, cells[i], config.metrics);
            } catch (const std::exception& e) {
                results[i].beta = cells[i].beta;
                results[i].latent = cells[i].latent.size;
                results[i].ok = false;
                results[i].error = e.what();
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
    if (workers == 1) {
        worker(true);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker, false);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    write_file_atomic(paths.out_dir / "sweep.csv", sweep_csv(results));
    return results;
}

void cmd_traverse(const ExperimentConfig& config, const CommandPaths& paths) {
    const VaeModel model = load_checkpoint(checkpoint_path(paths));
    if (model.latent().mode != LatentMode::torus) {
        throw ConfigError("traverse needs a torus checkpoint");
    }
    const std::size_t dim = model.latent().size;
    const TraverseConfig& t = config.traverse;
    if (t.circle >= dim) {
        throw ConfigError("traverse: circle " + std::to_string(t.circle) + " out of range for D = " +
                          std::to_string(dim));
    }
    if (t.steps == 0) {
        throw ConfigError("traverse: steps must be positive");
    }
    std::vector<double> anchor = t.anchor;
    if (anchor.empty()) {
        anchor.assign(dim, 0.0);
    }
    if (anchor.size() != dim) {
        throw ConfigError("traverse: anchor needs " + std::to_string(dim) + " angles");
    }
    const DatasetConfig& dc = config.dataset;
    const bool shapes = dc.kind == "shapes2d";
    RasterImage img;
    img.width = shapes ? dc.width : model.input_dim();
    img.height = shapes ? dc.height : 1;
    img.channels = shapes ? 3 : 1;
    if (img.width * img.height * img.channels != model.input_dim()) {
        throw ConfigError("traverse: dataset block does not match the checkpoint's sample size");
    }
    for (std::size_t s = 0; s < t.steps; ++s) {
        std::vector<double> angles = anchor;
        angles[t.circle] = kTwoPi * static_cast<double>(s) / static_cast<double>(t.steps);
        const std::vector<double> out = model.generate(AngleVector(angles));
        img.pixels.resize(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            img.pixels[i] = static_cast<float>(0.5 * (out[i] + 1.0));
        }
        const std::string name = "traverse_c" + std::to_string(t.circle) + "_" + std::to_string(s) + ".ppm";
        write_file_atomic(paths.out_dir / name, encode_ppm(img));
    }
}

} // namespace tdvae
