#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "banditlab/diversity.hpp"
#include "banditlab/policies.hpp"

namespace banditlab {

// Raised for malformed configurations (CLI exit code 1); runtime failures
// surface as other exception types (exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Serializable recipe for a context distribution. build(d) instantiates it
// at base dimension d (csv pools fix their own dimension).
struct ContextSpec {
    enum class Type { truncated_gaussian, uniform_ball, gibbs, csv, alpha_margin, gap };

    Type type = Type::truncated_gaussian;

    double scale = 0.5;               // truncated_gaussian
    std::string truncation = "linf";  // "linf" | "l2"
    double bound = 1.0;

    double radius = 1.0;  // uniform_ball

    std::vector<Vec> J;  // gibbs couplings; empty means all-zero (Rademacher)

    std::string csv_path;
    bool csv_normalize = true;

    double alpha = 1.0;  // alpha_margin wrapper
    Vec direction;

    Vec beta_diff;  // gap wrapper
    double kappa0 = 0.0;

    std::shared_ptr<ContextSpec> base;  // wrapped spec for alpha_margin / gap

    ContextDistribution build(int d) const;
};

struct PriorSpec {
    enum class Mode { correct, incorrect, fixed };
    Mode mode = Mode::correct;
    std::vector<Vec> fixed_betas;

    ParameterPrior build(bool intercept) const;
};

struct SigmaRule {
    bool scaled = false;  // false: sigma = value; true: sigma = value * sqrt(d)
    double value = 0.5;

    double sigma_for(int d) const;
};

struct Variant {
    std::string label;
    std::optional<int> d;
    std::optional<double> h;
    std::optional<int> q;
    std::optional<int> t0;
};

struct ExperimentConfig {
    std::string name = "experiment";
    int K = 2;
    int d = 3;
    int T = 2000;
    int n_runs = 200;
    uint64_t master_seed = 101;

    ContextSpec context;
    PriorSpec prior;
    SigmaRule sigma;
    std::string link = "identity";  // instance reward link
    bool intercept = false;         // adds the constant covariate and per-arm intercepts

    std::vector<PolicyConfig> policies;
    std::string output_dir = "out";
    std::vector<Variant> variants;

    LinkFunction link_fn() const;
    ExperimentConfig with_variant(const Variant& v) const;
};

// All per-run randomness, derived from mix_seed(master_seed, run_index) so
// runs are order-independent. Noise is a T x K array of standard normals
// indexed by (t, arm); every policy in the run sees the same contexts and
// the same noise array (common random numbers).
struct EpisodeStreams {
    ProblemInstance instance;
    std::vector<Vec> contexts;
    std::vector<Vec> noise;  // noise[t][arm], unscaled
    uint64_t episode_seed = 0;

    uint64_t policy_seed(int policy_index) const {
        return mix_seed(episode_seed, stream_tag::policy_base + static_cast<uint64_t>(policy_index));
    }
};

EpisodeStreams make_episode_streams(const ExperimentConfig& cfg, const ContextDistribution& dist,
                                    int run_index);

struct Trajectory {
    std::vector<StepRecord> steps;
    double final_regret = 0.0;
    int switch_time = 0;  // 0 = never switched / not applicable
};

Trajectory run_episode(const EpisodeStreams& streams, const PolicyConfig& policy, int policy_index,
                       int T);

struct PolicySummary {
    std::string label;
    std::vector<double> mean_regret;  // cumulative, index t-1
    std::vector<double> ci_half;      // 1.96 * stderr
    int switch_count = 0;
    std::map<int, int> switch_histogram;
    std::vector<double> final_regret;      // per run
    std::vector<double> half_time_regret;  // per run, cumulative regret at t = T/2
    std::vector<int> switch_times;         // per run, 0 = never
};

struct BatchSummary {
    std::string name;
    int K = 0, d = 0, T = 0, n_runs = 0;
    uint64_t master_seed = 0;
    double resolved_lambda0 = -1.0;   // monitor input actually used; < 0: no auto resolution
    double audited_lambda0 = -1.0;    // raw upper estimate from the auditor
    std::string config_json;          // echo of the configuration
    std::string csv_normalization_json;  // column shifts/scales when a csv pool was normalized
    std::vector<PolicySummary> policies;

    const PolicySummary& policy(const std::string& label) const;
};

// n_runs independent episodes (workers <= 0 picks the hardware width);
// aggregation is a fixed-order reduction, so results do not depend on
// completion order.
BatchSummary run_batch(const ExperimentConfig& cfg, int workers = 0);

// Batch plus file outputs (summary.csv / summary.json / curves.svg /
// runs.csv under cfg.output_dir).
BatchSummary run_batch_with_outputs(const ExperimentConfig& cfg, int workers = 0);

// The configs a variant-bearing experiment expands to (just the base config
// when no variants are declared).
std::vector<ExperimentConfig> expand_variants(const ExperimentConfig& cfg);

// Experiment presets; --full restores n_runs=1000, T=10000.
ExperimentConfig replicate(const std::string& preset_name, bool full = false);
std::vector<std::string> preset_names();

// --- configuration (de)serialization -------------------------------------

ExperimentConfig parse_experiment_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_to_json(const ExperimentConfig& cfg);

// --- exports ---------------------------------------------------------------

struct SummaryCsvRow {
    std::string policy;
    int t = 0;
    double mean_regret = 0.0, ci_low = 0.0, ci_high = 0.0;
};

void export_summary_csv(const BatchSummary& s, const std::string& path);
void export_summary_json(const BatchSummary& s, const std::string& path);
void export_summary_svg(const BatchSummary& s, const std::string& path);
void export_runs_csv(const BatchSummary& s, const std::string& path);
std::vector<SummaryCsvRow> read_summary_csv(const std::string& path);

// JSON reports for the CLI
std::string diversity_report_json(const DiversityReport& r);
std::string theory_constants_json(const TheoryConstants& c);
std::string csv_normalization_to_json(const ContextDistribution::CsvNormalization& n);

}  // namespace banditlab
