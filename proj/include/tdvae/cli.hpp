#pragma once

// Experiment configuration and the generate / train / evaluate / sweep /
// traverse commands behind the `tdvae` executable.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdvae/datagen.hpp"
#include "tdvae/dci.hpp"
#include "tdvae/train.hpp"

namespace tdvae {

struct DatasetConfig {
    std::string kind = "synthetic";  // "synthetic" or "shapes2d"
    std::size_t size = 4000;
    std::uint64_t seed = 0;
    std::size_t width = 16;          // shapes2d
    std::size_t height = 16;
    std::size_t factors = 3;         // synthetic
    std::size_t continuous = 0;
    double noise = 0.0;
    std::size_t output_dim = 16;
};

struct SweepConfig {
    std::vector<double> betas{0, 1, 3, 6, 9};
    std::vector<std::size_t> latents{4, 5, 6, 8};
};

struct TraverseConfig {
    std::size_t circle = 0;
    std::size_t steps = 16;
    std::vector<double> anchor;  // defaults to all zeros
};

struct ExperimentConfig {
    DatasetConfig dataset;
    TrainConfig model;
    MetricsConfig metrics;
    bool codes_from_factors = false;  // bypass the encoder: codes := factors
    SweepConfig sweep;
    TraverseConfig traverse;
    std::string output_dir;
};

/// Every seed must be given explicitly; a missing one is a ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

Dataset make_dataset(const DatasetConfig& config);

nlohmann::json to_json(const TrainReport& report, const TrainConfig& config);

/// Held-out rows used for metrics: the validation split of training.
std::vector<std::size_t> evaluation_rows(std::size_t n, const TrainConfig& config);

/// Codes of the evaluation rows paired with their factors.
CodeFactorTable evaluation_table(const VaeModel& model, const Dataset& ds, const TrainConfig& config);

struct CellResult {
    double beta = 0.0;
    std::size_t latent = 0;
    bool ok = false;
    std::string error;
    double validation_mse = 0.0;
    std::size_t best_epoch = 0;
    DciReport dci;
};

/// Train on the dataset's samples only, then score on the evaluation split.
CellResult train_and_evaluate(const Dataset& ds, const TrainConfig& train_config, const MetricsConfig& metrics);

struct CommandPaths {
    std::filesystem::path out_dir;
    std::filesystem::path dataset;     // defaults to <out>/dataset.tdds
    std::filesystem::path checkpoint;  // defaults to <out>/model.tdvae
};

/// Writes dataset.tdds and dataset.json (factor spec sidecar).
void cmd_generate(const ExperimentConfig& config, const CommandPaths& paths);

/// Writes model.tdvae (best-validation parameters) and train_report.json.
void cmd_train(const ExperimentConfig& config, const CommandPaths& paths);

/// Writes dci_report.json, importance.csv and heatmap.csv.
void cmd_evaluate(const ExperimentConfig& config, const CommandPaths& paths);

/// Writes sweep.csv with one row per (beta, latent) cell, beta-major. Cells
/// run on up to `workers` threads; failures are recorded and the sweep goes on.
std::vector<CellResult> cmd_sweep(const ExperimentConfig& config, const CommandPaths& paths, std::size_t workers);

/// Writes traverse_c<circle>_<step>.ppm for steps angles evenly covering [0, 2*pi).
void cmd_traverse(const ExperimentConfig& config, const CommandPaths& paths);

std::string sweep_csv(const std::vector<CellResult>& cells);

} // namespace tdvae
