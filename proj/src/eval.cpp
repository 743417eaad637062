#include "stegolab/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <functional>
#include <mutex>

#include "stegolab/cost.hpp"
#include "stegolab/rng.hpp"

namespace stegolab {

double compute_pe(double p_fa, double p_md) {
    if (!(p_fa >= 0 && p_fa <= 1) || !(p_md >= 0 && p_md <= 1))
        throw Error("compute_pe: rates must lie in [0, 1]");
    return 0.5 * (p_fa + p_md);
}

DetectionReport evaluate_classifier(const ClassifierModel& model,
                                    const std::vector<GrayImage>& covers,
                                    const std::vector<GrayImage>& stegos) {
    if (covers.empty() || stegos.empty()) throw Error("evaluate_classifier: empty test set");
    DetectionReport report;
    report.n_cover = covers.size();
    report.n_stego = stegos.size();
    std::size_t false_alarms = 0, missed = 0;
    for (const auto& img : covers) false_alarms += classify(model, img) == kStegoClass;
    for (const auto& img : stegos) missed += classify(model, img) == kCoverClass;
    report.p_fa = static_cast<double>(false_alarms) / static_cast<double>(covers.size());
    report.p_md = static_cast<double>(missed) / static_cast<double>(stegos.size());
    report.p_e = compute_pe(report.p_fa, report.p_md);
    return report;
}

std::vector<GammaCdfPoint> gamma_cdf(const std::vector<AttackOutcome>& outcomes,
                                     double delta_gamma, double gamma_max) {
    if (!(delta_gamma > 0) || !(gamma_max >= delta_gamma))
        throw Error("gamma_cdf: bad gamma grid");
    const int n_bins = static_cast<int>(std::ceil(gamma_max / delta_gamma));
    std::vector<GammaCdfPoint> curve;
    curve.reserve(static_cast<std::size_t>(n_bins) + 1);
    const double total = static_cast<double>(outcomes.empty() ? 1 : outcomes.size());
    for (int k = 0; k <= n_bins; ++k) {
        const double gamma = k * delta_gamma;
        long count = 0;
        for (const auto& o : outcomes)
            if (o.succeeded && o.gamma_used && *o.gamma_used <= gamma + 1e-12) ++count;
        curve.push_back({gamma, 100.0 * static_cast<double>(count) / total});
    }
    return curve;
}

AttackReport summarize_attacks(const std::vector<AttackOutcome>& outcomes,
                               const std::vector<double>& seconds, double delta_gamma,
                               double gamma_max) {
    AttackReport report;
    const int n_bins = static_cast<int>(std::ceil(gamma_max / delta_gamma));
    report.gamma_histogram.assign(static_cast<std::size_t>(n_bins) + 1, 0);
    long succeeded = 0;
    for (const auto& o : outcomes) {
        report.reembed_counts[o.reembeds] += 1;
        if (!o.succeeded) continue;
        ++succeeded;
        const int bin =
            o.gamma_used ? static_cast<int>(std::lround(*o.gamma_used / delta_gamma)) : 0;
        report.gamma_histogram[static_cast<std::size_t>(std::clamp(bin, 0, n_bins))] += 1;
    }
    report.success_rate =
        outcomes.empty() ? 0.0 : static_cast<double>(succeeded) / static_cast<double>(outcomes.size());
    if (!seconds.empty()) {
        report.min_seconds = *std::min_element(seconds.begin(), seconds.end());
        report.max_seconds = *std::max_element(seconds.begin(), seconds.end());
        double sum = 0;
        for (double s : seconds) sum += s;
        report.mean_seconds = sum / static_cast<double>(seconds.size());
    }
    return report;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            if (key == "width") cfg.width = std::stoi(value);
            else if (key == "height") cfg.height = std::stoi(value);
            else if (key == "n_train") cfg.n_train = std::stoul(value);
            else if (key == "n_validation") cfg.n_validation = std::stoul(value);
            else if (key == "n_test") cfg.n_test = std::stoul(value);
            else if (key == "payload_rate") cfg.payload_rate = std::stod(value);
            else if (key == "cost") cfg.cost_scheme = value;
            else if (key == "coder") cfg.coder = value;
            else if (key == "beta") cfg.beta = std::stod(value);
            else if (key == "delta_gamma") cfg.delta_gamma = std::stod(value);
            else if (key == "gamma_max") cfg.gamma_max = std::stod(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "master_seed") cfg.master_seed = std::stoull(value);
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "cover_dir") cfg.cover_dir = value;
            else if (key == "threads") cfg.threads = std::stoi(value);
            else if (key == "save_images") cfg.save_images = value == "1" || value == "true";
            else throw Error("config: unknown key '" + key + "'");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error("config line " + std::to_string(lineno) + ": cannot parse value '" +
                        value + "'");
        }
    }
    if (cfg.cost_scheme != "hill" && cfg.cost_scheme != "suniward")
        throw Error("config: cost must be 'hill' or 'suniward'");
    if (cfg.coder != "sim" && cfg.coder != "stc")
        throw Error("config: coder must be 'sim' or 'stc'");
    if (cfg.payload_rate < 0 || cfg.payload_rate >= 1.5849625007211562)
        throw Error("config: payload_rate out of range");
    if (cfg.threads < 1) throw Error("config: threads must be at least 1");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

namespace {

namespace fs = std::filesystem;

struct StageError : Error {
    StageError(const std::string& stage, const std::string& what)
        : Error("[" + stage + "] " + what) {}
};

CostMap scheme_costs(const std::string& scheme, const GrayImage& cover) {
    return scheme == "hill" ? hill_cost(cover) : suniward_cost(cover);
}

// deterministic seed keys per purpose
constexpr std::uint64_t kSeedCover = 0x10000;
constexpr std::uint64_t kSeedMessage = 0x20000;
constexpr std::uint64_t kSeedPlain = 0x30000;
constexpr std::uint64_t kSeedCmd = 0x40000;
constexpr std::uint64_t kSeedAttack = 0x50000;

// runs fn(i) for i in [0, n) on `threads` workers; any exception wins
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) throw Error(first_error);
}

std::string image_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cover_%05zu", index);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    f << text;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const std::size_t n_total = config.n_train + config.n_validation + config.n_test;
    if (n_total == 0) throw StageError("gen", "empty dataset");
    const auto n_bits = static_cast<std::size_t>(
        std::llround(config.payload_rate * config.width * config.height));

    fs::create_directories(config.out_dir);

    // ---- covers ------------------------------------------------------
    std::vector<GrayImage> covers(n_total);
    std::vector<std::string> ids(n_total);
    try {
        if (config.cover_dir.empty()) {
            parallel_for(n_total, config.threads, [&](std::size_t i) {
                covers[i] = generate_cover(derive_seed(config.master_seed, kSeedCover + i),
                                           config.width, config.height);
                ids[i] = image_id(i);
            });
        } else {
            const auto entries = load_manifest(config.cover_dir + "/manifest.txt");
            if (entries.size() < n_total)
                throw Error("cover manifest holds fewer images than the configured splits");
            for (std::size_t i = 0; i < n_total; ++i) {
                covers[i] = load_image(config.cover_dir + "/" + entries[i].path);
                if (covers[i].width != config.width || covers[i].height != config.height)
                    throw Error("cover " + entries[i].id + " does not match the configured size");
                ids[i] = entries[i].id;
            }
        }
    } catch (const std::exception& e) {
        throw StageError("gen", e.what());
    }

    // index ranges per split (covers are generated in split order)
    const std::size_t train_begin = 0, train_end = config.n_train;
    const std::size_t val_begin = train_end, val_end = train_end + config.n_validation;
    const std::size_t test_begin = val_end, test_end = n_total;

    std::vector<ManifestEntry> manifest;
    for (std::size_t i = 0; i < n_total; ++i) {
        const char* split = i < train_end ? "train" : (i < val_end ? "validation" : "test");
        manifest.push_back({ids[i], "covers/" + ids[i] + ".pgm", split});
    }

    if (config.save_images && config.cover_dir.empty()) {
        fs::create_directories(config.out_dir + "/covers");
        for (std::size_t i = 0; i < n_total; ++i)
            save_image(covers[i], config.out_dir + "/" + manifest[i].path);
        save_manifest(manifest, config.out_dir + "/manifest.txt");
    }

    // ---- stegos ------------------------------------------------------
    EmbedConfig embed_cfg;
    embed_cfg.beta = config.beta;
    embed_cfg.payload_rate = config.payload_rate;
    embed_cfg.coder_mode = config.coder == "stc" ? CoderMode::Stc : CoderMode::Simulator;

    std::vector<GrayImage> plain_stegos(n_total);
    std::vector<GrayImage> cmd_stegos(n_total);
    std::vector<CostMap> adjusted(n_total);
    try {
        parallel_for(n_total, config.threads, [&](std::size_t i) {
            const CostMap costs = scheme_costs(config.cost_scheme, covers[i]);
            // plain baseline: whole-image simulation with unadjusted costs
            const ChangeMap changes = simulate_embedding(
                costs, static_cast<double>(n_bits), derive_seed(config.master_seed, kSeedPlain + i));
            plain_stegos[i] = covers[i];
            for (std::size_t p = 0; p < changes.delta.size(); ++p)
                plain_stegos[i].data[p] =
                    static_cast<std::uint8_t>(plain_stegos[i].data[p] + changes.delta[p]);

            EmbedConfig per_image = embed_cfg;
            per_image.seed = derive_seed(config.master_seed, kSeedCmd + i);
            const BitMessage message =
                random_message(n_bits, derive_seed(config.master_seed, kSeedMessage + i));
            EmbedResult result = embed_synchronized(covers[i], message, costs, per_image);
            cmd_stegos[i] = std::move(result.stego);
            adjusted[i] = std::move(result.final_costs);
        });
    } catch (const std::exception& e) {
        throw StageError("stego", e.what());
    }

    if (config.save_images) {
        fs::create_directories(config.out_dir + "/stego_plain");
        fs::create_directories(config.out_dir + "/stego_cmd");
        for (std::size_t i = 0; i < n_total; ++i) {
            save_image(plain_stegos[i], config.out_dir + "/stego_plain/" + ids[i] + ".pgm");
            save_image(cmd_stegos[i], config.out_dir + "/stego_cmd/" + ids[i] + ".pgm");
        }
    }

    // ---- target classifier -------------------------------------------
    ExperimentResult result;
    ClassifierModel target;
    try {
        const std::vector<GrayImage> tc(covers.begin() + train_begin, covers.begin() + train_end);
        const std::vector<GrayImage> ts(plain_stegos.begin() + train_begin,
                                        plain_stegos.begin() + train_end);
        const std::vector<GrayImage> vc(covers.begin() + val_begin, covers.begin() + val_end);
        const std::vector<GrayImage> vs(plain_stegos.begin() + val_begin,
                                        plain_stegos.begin() + val_end);
        target = train_classifier(tc, ts, vc, vs, config.epochs,
                                  derive_seed(config.master_seed, 1));
        result.target_validation_accuracy = classification_accuracy(target, vc, vs);
        save_model(target, config.out_dir + "/target_model.stgm");
    } catch (const std::exception& e) {
        throw StageError("train", e.what());
    }

    // ---- attack campaign ----------------------------------------------
    std::vector<AttackOutcome> outcomes(n_total);
    std::vector<double> seconds(n_total, 0.0);
    std::vector<double> phi_before(n_total, 0.0), phi_after(n_total, 0.0);
    try {
        parallel_for(n_total, config.threads, [&](std::size_t i) {
            AdvConfig adv;
            adv.delta_gamma = config.delta_gamma;
            adv.gamma_max = config.gamma_max;
            adv.seed = derive_seed(config.master_seed, kSeedAttack + i);
            EmbedConfig per_image = embed_cfg;
            per_image.seed = derive_seed(config.master_seed, kSeedCmd + i);
            const BitMessage message =
                random_message(n_bits, derive_seed(config.master_seed, kSeedMessage + i));
            const auto t0 = std::chrono::steady_clock::now();
            phi_before[i] = classifier_phi(target, cmd_stegos[i]);
            outcomes[i] = ite_syn_attack(target, covers[i], message, cmd_stegos[i], adjusted[i],
                                         adv, per_image);
            phi_after[i] = classifier_phi(target, outcomes[i].adversarial_stego);
            seconds[i] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        });
    } catch (const std::exception& e) {
        throw StageError("attack", e.what());
    }

    if (config.save_images) {
        fs::create_directories(config.out_dir + "/adversarial");
        for (std::size_t i = 0; i < n_total; ++i)
            save_image(outcomes[i].adversarial_stego,
                       config.out_dir + "/adversarial/" + ids[i] + ".pgm");
    }

    // per-image CSVs; the seconds column is wall time and is exempt from
    // the byte-exact reproducibility contract
    try {
        auto write_rows = [&](const std::string& path, std::size_t begin, std::size_t end) {
            std::string csv =
                "id,payload,mode,succeeded,gamma_used,reembeds,phi_before,phi_after,seconds\n";
            for (std::size_t i = begin; i < end; ++i) {
                const auto& o = outcomes[i];
                csv += ids[i] + "," + format_double(config.payload_rate) + "," + config.coder +
                       "," + (o.succeeded ? "1" : "0") + "," +
                       (o.gamma_used ? format_double(*o.gamma_used) : std::string("")) + "," +
                       std::to_string(o.reembeds) + "," + format_double(phi_before[i]) + "," +
                       format_double(phi_after[i]) + "," + format_double(seconds[i]) + "\n";
            }
            write_text(path, csv);
        };
        write_rows(config.out_dir + "/attack_results.csv", test_begin, test_end);
        write_rows(config.out_dir + "/attack_train.csv", train_begin, train_end);
        write_rows(config.out_dir + "/attack_validation.csv", val_begin, val_end);
    } catch (const std::exception& e) {
        throw StageError("report", e.what());
    }

    // ---- adversarial retraining ---------------------------------------
    ClassifierModel retrained;
    try {
        std::vector<GrayImage> adv_train, adv_val, adv_test;
        for (std::size_t i = train_begin; i < train_end; ++i)
            adv_train.push_back(outcomes[i].adversarial_stego);
        for (std::size_t i = val_begin; i < val_end; ++i)
            adv_val.push_back(outcomes[i].adversarial_stego);
        for (std::size_t i = test_begin; i < test_end; ++i)
            adv_test.push_back(outcomes[i].adversarial_stego);
        const std::vector<GrayImage> tc(covers.begin() + train_begin, covers.begin() + train_end);
        const std::vector<GrayImage> vc(covers.begin() + val_begin, covers.begin() + val_end);
        retrained = train_classifier(tc, adv_train, vc, adv_val, config.epochs,
                                     derive_seed(config.master_seed, 2));
        save_model(retrained, config.out_dir + "/retrained_model.stgm");

        const std::vector<GrayImage> test_covers(covers.begin() + test_begin, covers.end());
        result.retrained_adversarial = evaluate_classifier(retrained, test_covers, adv_test);
    } catch (const std::exception& e) {
        throw StageError("retrain", e.what());
    }

    // ---- reports -------------------------------------------------------
    try {
        const std::vector<GrayImage> test_covers(covers.begin() + test_begin, covers.end());
        const std::vector<GrayImage> test_plain(plain_stegos.begin() + test_begin,
                                                plain_stegos.end());
        const std::vector<GrayImage> test_cmd(cmd_stegos.begin() + test_begin, cmd_stegos.end());
        result.baseline_plain = evaluate_classifier(target, test_covers, test_plain);
        result.baseline_cmd = evaluate_classifier(target, test_covers, test_cmd);
        result.target_heldout_accuracy =
            classification_accuracy(target, test_covers, test_plain);

        result.test_outcomes.assign(outcomes.begin() + test_begin, outcomes.end());
        const std::vector<double> test_seconds(seconds.begin() + test_begin, seconds.end());
        result.attack = summarize_attacks(result.test_outcomes, test_seconds, config.delta_gamma,
                                          config.gamma_max);
        result.cdf = gamma_cdf(result.test_outcomes, config.delta_gamma, config.gamma_max);

        std::string cdf_csv = "gamma,cumulative_success_percent\n";
        for (const auto& p : result.cdf)
            cdf_csv += format_double(p.gamma) + "," + format_double(p.cumulative_percent) + "\n";
        write_text(config.out_dir + "/gamma_cdf.csv", cdf_csv);

        std::string det = "report,p_fa,p_md,p_e,n_cover,n_stego\n";
        auto det_row = [&det](const std::string& name, const DetectionReport& r) {
            det += name + "," + format_double(r.p_fa) + "," + format_double(r.p_md) + "," +
                   format_double(r.p_e) + "," + std::to_string(r.n_cover) + "," +
                   std::to_string(r.n_stego) + "\n";
        };
        det_row("target_vs_plain", result.baseline_plain);
        det_row("target_vs_cmd", result.baseline_cmd);
        det_row("retrained_vs_adversarial", result.retrained_adversarial);
        write_text(config.out_dir + "/detection_reports.csv", det);

        std::string summary;
        summary += "covers: " + std::to_string(n_total) + " (" + std::to_string(config.n_train) +
                   " train / " + std::to_string(config.n_validation) + " validation / " +
                   std::to_string(config.n_test) + " test)\n";
        summary += "payload_rate: " + format_double(config.payload_rate) + " bpp, cost: " +
                   config.cost_scheme + ", coder: " + config.coder + "\n";
        summary += "target validation accuracy: " +
                   format_double(result.target_validation_accuracy) + "\n";
        summary += "target held-out accuracy (plain): " +
                   format_double(result.target_heldout_accuracy) + "\n";
        summary += "P_E target vs plain: " + format_double(result.baseline_plain.p_e) + "\n";
        summary += "P_E target vs cmd: " + format_double(result.baseline_cmd.p_e) + "\n";
        summary += "attack success rate (test): " + format_double(result.attack.success_rate) +
                   "\n";
        summary += "attack seconds min/max/mean: " + format_double(result.attack.min_seconds) +
                   "/" + format_double(result.attack.max_seconds) + "/" +
                   format_double(result.attack.mean_seconds) + "\n";
        summary += "P_E retrained vs adversarial: " +
                   format_double(result.retrained_adversarial.p_e) + "\n";
        write_text(config.out_dir + "/summary.txt", summary);
    } catch (const std::exception& e) {
        throw StageError("report", e.what());
    }

    return result;
}

} // namespace stegolab
