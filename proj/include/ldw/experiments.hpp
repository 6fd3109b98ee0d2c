#pragma once

// Configuration-driven Monte Carlo sweeps over SNR: residual/eigenvector
// alignment experiments, mean-estimation experiments, and theory-curve
// emission, all writing one long-format CSV.

#include "ldw/tensor3.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ldw::experiments {

enum class Mode { alignment, estimation, theory };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SnrGrid {
    double min = 0.0;
    double max = 0.0;
    int points = 0;
    bool log_spacing = true;

    std::vector<double> values() const;
};

struct ExperimentConfig {
    int K = 0;
    int P = 0;
    int N = 0;
    Eigen::VectorXd weights;
    Eigen::MatrixXd mean_gram;
    SnrGrid snr_grid;
    int replicates = 1;
    std::uint64_t seed = 0;
    Mode mode = Mode::theory;
    bool method_standard = true;
    bool method_corrected = true;
    CoefficientVariant coefficient_variant = kDefaultCoefficientVariant;
    std::string output_path;

    void validate() const;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
};

/// One aggregated output row. NaN stands for "absent" and serializes as an
/// empty CSV field.
struct SweepRecord {
    double snr = 0.0;
    double sigma2 = 0.0;
    std::string quantity;
    int index_i = -1;
    int index_j = -1;
    std::string method;  // "standard", "corrected" or "theory"
    double empirical_mean = 0.0;
    double empirical_std = 0.0;
    double theoretical_value = 0.0;
    int replicates_used = 0;
    int failures = 0;
};

/// The mean configuration a sweep uses: realized from config.mean_gram with
/// a sub-seed of config.seed, so all modes of one config share their geometry.
Eigen::MatrixXd config_means(const ExperimentConfig& config);

std::vector<SweepRecord> run_alignment_sweep(const ExperimentConfig& config, int threads = 0);
std::vector<SweepRecord> run_estimation_sweep(const ExperimentConfig& config, int threads = 0);
std::vector<SweepRecord> emit_theory(const ExperimentConfig& config);

std::string to_csv(const std::vector<SweepRecord>& records);
void write_csv(const std::vector<SweepRecord>& records, const std::string& path);

}  // namespace ldw::experiments
