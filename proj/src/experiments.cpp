#include "ldw/experiments.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

namespace ldw::experiments {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int resolve_threads(int threads, std::size_t items) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(items, 1)));
}

// Runs fn(i) for i in [0, items) on a worker pool. Work items own their
// seeds and output slots, so the schedule does not affect results.
template <typename Fn>
void parallel_for(std::size_t items, int threads, Fn&& fn) {
    threads = resolve_threads(threads, items);
    if (threads == 1) {
        for (std::size_t i = 0; i < items; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= items) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

struct Aggregate {
    double mean = kNaN;
    double std = kNaN;
    int used = 0;
};

Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    a.used = static_cast<int>(xs.size());
    if (xs.empty()) return a;
    double sum = 0.0;
    for (double x : xs) sum += x;
    a.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        a.std = 0.0;
        return a;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return a;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t snr_idx, std::size_t rep) {
    return mix_seed(mix_seed(seed, 0x534e5200u + snr_idx), rep);
}

GmmParams make_params(const ExperimentConfig& config, const Eigen::MatrixXd& means,
                      double sigma2) {
    GmmParams params;
    params.K = config.K;
    params.P = config.P;
    params.weights = config.weights;
    params.means = means;
    params.sigma2 = sigma2;
    return params;
}

/// Asymptotic limit of the corrected-map dot products:
/// mu_i^T U_K H Gamma^{-1} U_K^T mu_j with H the supercritical indicator.
Eigen::MatrixXd corrected_dot_limit(const PopulationSpectrum& pop, const Eigen::MatrixXd& means,
                                    double c) {
    Eigen::VectorXd h(pop.gamma.size());
    for (Eigen::Index k = 0; k < pop.gamma.size(); ++k)
        h(k) = pop.ell(k) > std::sqrt(c) ? 1.0 / pop.gamma(k) : 0.0;
    Eigen::MatrixXd proj = pop.basis.transpose() * means;
    Eigen::MatrixXd dots = proj.transpose() * h.asDiagonal() * proj;
    return 0.5 * (dots + dots.transpose());
}

}  // namespace

Eigen::MatrixXd config_means(const ExperimentConfig& config) {
    return means_from_gram(config.P, config.mean_gram, mix_seed(config.seed, 0x4d45414eu));
}

std::vector<double> SnrGrid::values() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
        out.push_back(min);
        return out;
    }
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        out.push_back(log_spacing ? min * std::pow(max / min, t) : min + t * (max - min));
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (K < 1 || K > 8) throw ConfigError("config: K must be in [1, 8]");
    if (P < K) throw ConfigError("config: P must be >= K");
    if (N < 2) throw ConfigError("config: N must be >= 2");
    if (weights.size() != K) throw ConfigError("config: weights must have K entries");
    if (weights.minCoeff() <= 0.0) throw ConfigError("config: weights must be positive");
    if (std::abs(weights.sum() - 1.0) > 1e-12) throw ConfigError("config: weights must sum to 1");
    if (mean_gram.rows() != K || mean_gram.cols() != K)
        throw ConfigError("config: mean_gram must be K x K");
    if (snr_grid.min <= 0.0) throw ConfigError("config: snr_grid.min must be positive");
    if (snr_grid.points < 2 && mode != Mode::theory)
        throw ConfigError("config: snr_grid.points must be >= 2 for sweeps");
    if (snr_grid.points < 1) throw ConfigError("config: snr_grid.points must be >= 1");
    if (snr_grid.points > 1 && snr_grid.max <= snr_grid.min)
        throw ConfigError("config: snr_grid.max must exceed snr_grid.min");
    if (replicates < 1) throw ConfigError("config: replicates must be >= 1");
    if (!method_standard && !method_corrected && mode != Mode::theory)
        throw ConfigError("config: at least one method required");

    // Gram must define a valid mean configuration.
    Eigen::LLT<Eigen::MatrixXd> llt(mean_gram);
    if (llt.info() != Eigen::Success)
        throw ConfigError("config: mean_gram is not positive definite");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }

    ExperimentConfig config;
    try {
        config.K = j.at("K").get<int>();
        config.P = j.at("P").get<int>();
        config.N = j.at("N").get<int>();

        const auto& w = j.at("weights");
        config.weights.resize(static_cast<Eigen::Index>(w.size()));
        for (std::size_t i = 0; i < w.size(); ++i)
            config.weights(static_cast<Eigen::Index>(i)) = w.at(i).get<double>();

        const auto& g = j.at("mean_gram");
        config.mean_gram.resize(static_cast<Eigen::Index>(g.size()),
                                static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.at(i).size() != g.size()) throw ConfigError("config: mean_gram must be square");
            for (std::size_t k = 0; k < g.at(i).size(); ++k)
                config.mean_gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    g.at(i).at(k).get<double>();
        }

        const auto& grid = j.at("snr_grid");
        config.snr_grid.min = grid.at("min").get<double>();
        config.snr_grid.max = grid.at("max").get<double>();
        config.snr_grid.points = grid.at("points").get<int>();
        const std::string spacing = grid.value("spacing", std::string("log"));
        if (spacing == "log") {
            config.snr_grid.log_spacing = true;
        } else if (spacing == "linear") {
            config.snr_grid.log_spacing = false;
        } else {
            throw ConfigError("config: snr_grid.spacing must be 'linear' or 'log'");
        }

        config.replicates = j.value("replicates", 1);
        config.seed = j.value("seed", static_cast<std::uint64_t>(0));

        const std::string mode = j.at("mode").get<std::string>();
        if (mode == "alignment") {
            config.mode = Mode::alignment;
        } else if (mode == "estimation") {
            config.mode = Mode::estimation;
        } else if (mode == "theory") {
            config.mode = Mode::theory;
        } else {
            throw ConfigError("config: mode must be alignment, estimation or theory");
        }

        if (j.contains("methods")) {
            config.method_standard = false;
            config.method_corrected = false;
            for (const auto& m : j.at("methods")) {
                const std::string name = m.get<std::string>();
                if (name == "standard") {
                    config.method_standard = true;
                } else if (name == "corrected") {
                    config.method_corrected = true;
                } else {
                    throw ConfigError("config: unknown method '" + name + "'");
                }
            }
        }

        const std::string variant = j.value("coefficient_variant", std::string("derived"));
        if (variant == "paper") {
            config.coefficient_variant = CoefficientVariant::paper;
        } else if (variant == "derived") {
            config.coefficient_variant = CoefficientVariant::derived;
        } else {
            throw ConfigError("config: coefficient_variant must be 'paper' or 'derived'");
        }

        config.output_path = j.value("output_path", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    config.validate();
    return config;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

namespace {

struct AlignmentReplicate {
    Eigen::VectorXd zeta;
    std::optional<Eigen::MatrixXd> rho_standard;
    std::optional<Eigen::MatrixXd> rho_corrected;
    std::optional<Eigen::MatrixXd> wdot;  // raw corrected dot products
};

}  // namespace

std::vector<SweepRecord> run_alignment_sweep(const ExperimentConfig& config, int threads) {
    config.validate();
    if (config.mode != Mode::alignment)
        throw ConfigError("run_alignment_sweep: config mode is not 'alignment'");

    const int K = config.K;
    const double c = static_cast<double>(config.P) / static_cast<double>(config.N);
    const Eigen::MatrixXd means = config_means(config);
    const std::vector<double> snrs = config.snr_grid.values();
    const std::size_t R = static_cast<std::size_t>(config.replicates);

    std::vector<AlignmentReplicate> results(snrs.size() * R);
    parallel_for(results.size(), threads, [&](std::size_t idx) {
        const std::size_t si = idx / R;
        const std::size_t rep = idx % R;
        const double sigma2 = 1.0 / snrs[si];
        const GmmParams params = make_params(config, means, sigma2);
        const PopulationSpectrum pop = population_spectrum(params);

        GmmSample draw = sample(params, config.N, replicate_seed(config.seed, si, rep));
        EmpiricalSpectrum spec = empirical_spectrum(draw.data, K);

        AlignmentReplicate& out = results[idx];
        out.zeta = eigvec_alignment(spec.basis, pop.basis);
        if (config.method_standard) {
            try {
                out.rho_standard = residual_alignment(standard_from_spectrum(spec), means);
            } catch (const DegenerateMapError&) {
            }
        }
        if (config.method_corrected) {
            try {
                WhiteningMap map = corrected_from_spectrum(spec);
                Eigen::MatrixXd mapped = map.forward * means;
                out.wdot = (mapped.transpose() * mapped).eval();
                out.rho_corrected = residual_alignment(map, means);
            } catch (const DegenerateMapError&) {
            }
        }
    });

    std::vector<SweepRecord> records;
    for (std::size_t si = 0; si < snrs.size(); ++si) {
        const double snr = snrs[si];
        const double sigma2 = 1.0 / snr;
        const GmmParams params = make_params(config, means, sigma2);
        const PopulationSpectrum pop = population_spectrum(params);
        const spiked::AlignmentPrediction pred = spiked::predicted_alignment(pop, means, sigma2, c);
        const Eigen::MatrixXd wdot_theory = corrected_dot_limit(pop, means, c);

        auto collect = [&](auto&& extract) {
            std::vector<double> xs;
            xs.reserve(R);
            for (std::size_t rep = 0; rep < R; ++rep) {
                const auto v = extract(results[si * R + rep]);
                if (v) xs.push_back(*v);
            }
            return xs;
        };
        auto push = [&](const std::string& quantity, int i, int j, const std::string& method,
                        const std::vector<double>& xs, double theory) {
            Aggregate a = aggregate(xs);
            records.push_back(SweepRecord{snr, sigma2, quantity, i, j, method, a.mean, a.std,
                                          theory, a.used,
                                          static_cast<int>(R) - a.used});
        };

        for (int k = 0; k < K; ++k) {
            auto xs = collect([&](const AlignmentReplicate& r) -> std::optional<double> {
                return r.zeta(k);
            });
            push("zeta", k, -1, "standard", xs,
                 spiked::spike_forward(pop.ell(k), sigma2, c).zeta);
        }
        for (int i = 0; i < K; ++i) {
            for (int j = i + 1; j < K; ++j) {
                if (config.method_standard) {
                    auto xs = collect([&](const AlignmentReplicate& r) -> std::optional<double> {
                        if (!r.rho_standard) return std::nullopt;
                        return (*r.rho_standard)(i, j);
                    });
                    push("rho", i, j, "standard", xs, pred.rho(i, j));
                }
                if (config.method_corrected) {
                    auto xs = collect([&](const AlignmentReplicate& r) -> std::optional<double> {
                        if (!r.rho_corrected) return std::nullopt;
                        return (*r.rho_corrected)(i, j);
                    });
                    const double dii = wdot_theory(i, i);
                    const double djj = wdot_theory(j, j);
                    const double rho_theory = (dii > 0.0 && djj > 0.0)
                                                  ? std::abs(wdot_theory(i, j)) / std::sqrt(dii * djj)
                                                  : kNaN;
                    push("rho", i, j, "corrected", xs, rho_theory);
                }
            }
        }
        if (config.method_corrected) {
            for (int i = 0; i < K; ++i) {
                for (int j = i; j < K; ++j) {
                    auto raw = collect([&](const AlignmentReplicate& r) -> std::optional<double> {
                        if (!r.wdot) return std::nullopt;
                        return (*r.wdot)(i, j);
                    });
                    push("wdot", i, j, "corrected", raw, wdot_theory(i, j));
                    if (i != j) {
                        auto abs = collect([&](const AlignmentReplicate& r) -> std::optional<double> {
                            if (!r.wdot) return std::nullopt;
                            return std::abs((*r.wdot)(i, j));
                        });
                        push("wdot_abs", i, j, "corrected", abs, std::abs(wdot_theory(i, j)));
                    }
                }
            }
        }
    }
    return records;
}

namespace {

struct EstimationReplicate {
    std::optional<Eigen::VectorXd> sqerr_standard;
    std::optional<Eigen::VectorXd> sqerr_corrected;
};

Eigen::VectorXd matched_errors(const LearnGmmResult& fit, const Eigen::MatrixXd& means) {
    const int K = static_cast<int>(means.cols());
    std::vector<Eigen::VectorXd> est(static_cast<std::size_t>(K));
    std::vector<Eigen::VectorXd> truth(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        est[static_cast<std::size_t>(k)] = fit.means.col(k);
        truth[static_cast<std::size_t>(k)] = means.col(k);
    }
    return match_permutation(est, truth).squared_errors;
}

}  // namespace

std::vector<SweepRecord> run_estimation_sweep(const ExperimentConfig& config, int threads) {
    config.validate();
    if (config.mode != Mode::estimation)
        throw ConfigError("run_estimation_sweep: config mode is not 'estimation'");

    const int K = config.K;
    const Eigen::MatrixXd means = config_means(config);
    const std::vector<double> snrs = config.snr_grid.values();
    const std::size_t R = static_cast<std::size_t>(config.replicates);

    std::vector<EstimationReplicate> results(snrs.size() * R);
    parallel_for(results.size(), threads, [&](std::size_t idx) {
        const std::size_t si = idx / R;
        const std::size_t rep = idx % R;
        const double sigma2 = 1.0 / snrs[si];
        const GmmParams params = make_params(config, means, sigma2);

        const std::uint64_t rseed = replicate_seed(config.seed, si, rep);
        // Both methods see the same 2N samples (paired comparison).
        GmmSample draw = sample(params, 2 * static_cast<Eigen::Index>(config.N), rseed);

        EstimationReplicate& out = results[idx];
        if (config.method_standard) {
            try {
                out.sqerr_standard = matched_errors(
                    learn_gmm(draw.data, K, false, config.coefficient_variant, mix_seed(rseed, 1)),
                    means);
            } catch (const std::runtime_error&) {
            }
        }
        if (config.method_corrected) {
            try {
                out.sqerr_corrected = matched_errors(
                    learn_gmm(draw.data, K, true, config.coefficient_variant, mix_seed(rseed, 2)),
                    means);
            } catch (const std::runtime_error&) {
            }
        }
    });

    std::vector<SweepRecord> records;
    for (std::size_t si = 0; si < snrs.size(); ++si) {
        const double snr = snrs[si];
        const double sigma2 = 1.0 / snr;

        auto emit_method = [&](const std::string& method, auto&& member) {
            for (int k = -1; k < K; ++k) {
                std::vector<double> xs;
                xs.reserve(R);
                for (std::size_t rep = 0; rep < R; ++rep) {
                    const auto& v = member(results[si * R + rep]);
                    if (!v) continue;
                    xs.push_back(k < 0 ? v->sum() : (*v)(k));
                }
                Aggregate a = aggregate(xs);
                records.push_back(SweepRecord{snr, sigma2,
                                              k < 0 ? "sqerr_total" : "sqerr", k, -1, method,
                                              a.mean, a.std, kNaN, a.used,
                                              static_cast<int>(R) - a.used});
            }
        };
        if (config.method_standard)
            emit_method("standard",
                        [](const EstimationReplicate& r) -> const std::optional<Eigen::VectorXd>& {
                            return r.sqerr_standard;
                        });
        if (config.method_corrected)
            emit_method("corrected",
                        [](const EstimationReplicate& r) -> const std::optional<Eigen::VectorXd>& {
                            return r.sqerr_corrected;
                        });
    }
    return records;
}

std::vector<SweepRecord> emit_theory(const ExperimentConfig& config) {
    config.validate();

    const int K = config.K;
    const double c = static_cast<double>(config.P) / static_cast<double>(config.N);
    const Eigen::MatrixXd means = config_means(config);
    std::vector<SweepRecord> records;

    // gamma does not depend on sigma2; any valid sigma2 works here.
    const PopulationSpectrum base = population_spectrum(make_params(config, means, 1.0));
    const Eigen::VectorXd snr_star = spiked::critical_snr(base.gamma, c);
    for (int k = 0; k < K; ++k) {
        records.push_back(SweepRecord{snr_star(k), 1.0 / snr_star(k), "critical_snr", k, -1,
                                      "theory", kNaN, kNaN, snr_star(k), 0, 0});
    }

    for (double snr : config.snr_grid.values()) {
        const double sigma2 = 1.0 / snr;
        const GmmParams params = make_params(config, means, sigma2);
        const PopulationSpectrum pop = population_spectrum(params);
        const spiked::AlignmentPrediction pred = spiked::predicted_alignment(pop, means, sigma2, c);

        for (int k = 0; k < K; ++k) {
            const spiked::SpikeInfo s = spiked::spike_forward(pop.ell(k), sigma2, c);
            records.push_back(
                SweepRecord{snr, sigma2, "zeta", k, -1, "theory", kNaN, kNaN, s.zeta, 0, 0});
            records.push_back(SweepRecord{snr, sigma2, "lambda_tilde", k, -1, "theory", kNaN, kNaN,
                                          s.lambda_tilde, 0, 0});
        }
        for (int i = 0; i < K; ++i)
            for (int j = i + 1; j < K; ++j)
                records.push_back(SweepRecord{snr, sigma2, "rho", i, j, "theory", kNaN, kNaN,
                                              pred.rho(i, j), 0, 0});
    }
    return records;
}

namespace {

std::string format_double(double x) {
    if (std::isnan(x)) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

}  // namespace

std::string to_csv(const std::vector<SweepRecord>& records) {
    std::ostringstream out;
    out << "snr,sigma2,quantity,index_i,index_j,method,empirical_mean,empirical_std,"
           "theoretical_value,replicates_used,failures\n";
    for (const SweepRecord& r : records) {
        out << format_double(r.snr) << ',' << format_double(r.sigma2) << ',' << r.quantity << ','
            << r.index_i << ',' << r.index_j << ',' << r.method << ','
            << format_double(r.empirical_mean) << ',' << format_double(r.empirical_std) << ','
            << format_double(r.theoretical_value) << ',' << r.replicates_used << ',' << r.failures
            << '\n';
    }
    return out.str();
}

void write_csv(const std::vector<SweepRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
    out << to_csv(records);
    if (!out) throw std::runtime_error("write_csv: write failed for '" + path + "'");
}

}  // namespace ldw::experiments
