#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stegolab/attack.hpp"

namespace stegolab {

struct DetectionReport {
    double p_fa = 0; // covers read as stego
    double p_md = 0; // stegos read as cover
    double p_e = 0;  // (p_fa + p_md) / 2
    std::size_t n_cover = 0;
    std::size_t n_stego = 0;
};

double compute_pe(double p_fa, double p_md);

DetectionReport evaluate_classifier(const ClassifierModel& model,
                                    const std::vector<GrayImage>& covers,
                                    const std::vector<GrayImage>& stegos);

struct GammaCdfPoint {
    double gamma = 0;
    double cumulative_percent = 0; // of all attempts
};

// Cumulative success percentage over the gamma grid k*delta_gamma,
// k = 0 .. ceil(gamma_max/delta_gamma); non-decreasing, final point equals
// the overall success rate.
std::vector<GammaCdfPoint> gamma_cdf(const std::vector<AttackOutcome>& outcomes,
                                     double delta_gamma, double gamma_max);

struct AttackReport {
    double success_rate = 0;              // succeeded / total
    std::vector<long> gamma_histogram;    // successes per gamma bin k*delta_gamma
    double min_seconds = 0;
    double max_seconds = 0;
    double mean_seconds = 0;
    std::map<int, long> reembed_counts;   // re-embed count -> images
};

AttackReport summarize_attacks(const std::vector<AttackOutcome>& outcomes,
                               const std::vector<double>& seconds, double delta_gamma,
                               double gamma_max);

// Plain-text key=value experiment configuration.
struct ExperimentConfig {
    int width = 64;
    int height = 64;
    std::size_t n_train = 2000;
    std::size_t n_validation = 200;
    std::size_t n_test = 500;
    double payload_rate = 0.4;
    std::string cost_scheme = "hill"; // hill | suniward
    std::string coder = "sim";        // sim | stc
    double beta = 10.0;
    double delta_gamma = 0.1;
    double gamma_max = 10.0;
    int epochs = 16;
    std::uint64_t master_seed = 1;
    std::string out_dir = "out";
    std::string cover_dir;  // optional: load covers from a manifest instead
    int threads = 1;
    bool save_images = true;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct ExperimentResult {
    double target_validation_accuracy = 0;
    double target_heldout_accuracy = 0; // on the test split, plain stegos
    DetectionReport baseline_plain;
    DetectionReport baseline_cmd;
    AttackReport attack;
    DetectionReport retrained_adversarial;
    std::vector<AttackOutcome> test_outcomes;
    std::vector<GammaCdfPoint> cdf;
};

// Full desk campaign: covers -> costs -> plain + synchronized stegos ->
// target training -> adversarial attack -> adversarial retraining. All
// artifacts and CSVs are written under config.out_dir; everything except
// wall-clock timing columns reproduces byte-exactly from the master seed in
// single-threaded mode.
ExperimentResult run_experiment(const ExperimentConfig& config);

} // namespace stegolab
