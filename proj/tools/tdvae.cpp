// tdvae: dataset generation, training, DCI evaluation, beta/latent sweeps and
// latent traversals driven by one JSON experiment config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tdvae/cli.hpp"
#include "tdvae/error.hpp"
#include "tdvae/kernels.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"Torus-latent VAE experiments and disentanglement metrics"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    std::string dataset;
    std::string checkpoint;
    std::size_t workers = 1;
    int threads = 0;
    long circle = -1;
    long steps = -1;

    app.add_option("-c,--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("-o,--out", out_dir, "output directory (default: config output_dir, else '.')");
    app.add_option("--dataset", dataset, "dataset file (default: <out>/dataset.tdds)");
    app.add_option("--checkpoint", checkpoint, "model file (default: <out>/model.tdvae)");
    app.add_option("-w,--workers", workers, "sweep cells trained concurrently")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "OpenMP threads for the numeric kernels (0: runtime default)")
        ->check(CLI::NonNegativeNumber);

    auto* gen = app.add_subcommand("generate", "render the dataset described by the config");
    auto* trn = app.add_subcommand("train", "train a VAE on the dataset's samples");
    auto* evl = app.add_subcommand("evaluate", "score a checkpoint with DCI and the DC-score");
    auto* swp = app.add_subcommand("sweep", "train and score every (beta, latent) cell");
    auto* trv = app.add_subcommand("traverse", "decode a sweep of one circle's angle");
    trv->add_option("--circle", circle, "circle index (overrides the config)")->check(CLI::NonNegativeNumber);
    trv->add_option("--steps", steps, "number of angles (overrides the config)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        tdvae::ExperimentConfig config = tdvae::load_config(config_path);
        if (circle >= 0) {
            config.traverse.circle = static_cast<std::size_t>(circle);
        }
        if (steps > 0) {
            config.traverse.steps = static_cast<std::size_t>(steps);
        }
        if (threads > 0) {
            tdvae::set_kernel_threads(threads);
        }
        tdvae::CommandPaths paths;
        paths.out_dir = !out_dir.empty() ? fs::path(out_dir)
                        : !config.output_dir.empty() ? fs::path(config.output_dir) : fs::path(".");
        paths.dataset = dataset;
        paths.checkpoint = checkpoint;
        fs::create_directories(paths.out_dir);

        if (*gen) {
            tdvae::cmd_generate(config, paths);
        } else if (*trn) {
            tdvae::cmd_train(config, paths);
        } else if (*evl) {
            tdvae::cmd_evaluate(config, paths);
        } else if (*swp) {
            const auto cells = tdvae::cmd_sweep(config, paths, workers);
            for (const auto& c : cells) {
                if (!c.ok) {
                    std::cerr << "cell beta=" << c.beta << " latent=" << c.latent << " failed: " << c.error << '\n';
                }
            }
        } else if (*trv) {
            tdvae::cmd_traverse(config, paths);
        }
    } catch (const tdvae::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const tdvae::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const tdvae::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
