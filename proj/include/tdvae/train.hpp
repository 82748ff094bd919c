#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tdvae/adam.hpp"
#include "tdvae/vae.hpp"

namespace tdvae {

struct TrainConfig {
    LatentSpec latent;
    double beta = 1.0;
    double learning_rate = 1e-4;
    std::size_t batch_size = 144;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    std::vector<std::size_t> encoder_hidden{256, 128};
    std::vector<std::size_t> decoder_hidden{128, 256};
    double validation_fraction = 0.2;

    /// Throws ConfigError on beta < 0, batch_size == 0, epochs == 0 or a bad learning rate.
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;      // 1-based
    double train_loss = 0.0;    // mean ELBO loss over the epoch's batches
    double validation_mse = 0.0;
};

struct TrainReport {
    double initial_validation_mse = 0.0;  // untrained model
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;           // 1-based, argmin of validation MSE
    double best_validation_mse = 0.0;
    VaeModel model;                       // parameters from best_epoch
};

/// Called after each epoch; purely informational.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains a VAE on unlabeled samples (one row each, values in [-1, 1]).
/// An `validation_fraction` share of the rows, picked by a shuffle seeded from
/// `config.seed`, is held out; the returned model is the epoch with the
/// lowest validation reconstruction MSE. Deterministic for a given seed.
TrainReport train(const TrainConfig& config, const Matrix& samples, const EpochCallback& on_epoch = {});

/// Validation MSE per element of the noise-free reconstruction.
double validation_mse(const VaeModel& model, const Matrix& samples);

/// Splits row indices 0..n-1 into (train, validation) by a seeded shuffle.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double holdout_fraction,
                                                                            std::uint64_t seed);

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

} // namespace tdvae
