#pragma once

#include "ddi/kdtree.hpp"
#include "ddi/phase_space.hpp"
#include "ddi/reference_materials.hpp"

#include <cstdint>
#include <iosfwd>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace ddi {

/// Attainable (strain, stress) pair with an optional fidelity penalty in squared-distance units.
struct DataPoint {
    LocalVector strain;
    LocalVector stress;
    double fidelity_cost = 0.0;

    DataPoint() = default;
    DataPoint(LocalVector eps, LocalVector sig, double cost = 0.0);
    DataPoint(double eps, double sig, double cost = 0.0);

    LocalPhasePoint phase_point() const { return {strain, stress}; }
};

struct NearestHit {
    std::size_t index = 0;
    double objective = 0.0;  // local_norm_sq(z - y) + fidelity_cost(y)
};

/// Finite local material data set, indexed for nearest-point queries under one local metric.
/// Sets below kScanThreshold points are always scanned; larger sets build their kd-tree on the
/// kLazyQueries-th query, since most sets are queried only a handful of times.
class LocalDataSet {
public:
    static constexpr std::size_t kScanThreshold = 64;
    static constexpr unsigned kLazyQueries = 16;

    LocalDataSet(std::vector<DataPoint> points, const LocalMetric& metric);

    std::size_t size() const { return points_.size(); }
    const std::vector<DataPoint>& points() const { return points_; }
    const DataPoint& operator[](std::size_t i) const { return points_[i]; }
    const LocalMetric& metric() const { return metric_; }
    bool has_costs() const { return has_costs_; }

    /// Indexed search; identical result to nearest_scan.
    NearestHit nearest(const LocalPhasePoint& z) const;
    NearestHit nearest_scan(const LocalPhasePoint& z) const;

    /// Builds the kd-tree now (thread-safe, idempotent).
    void build_index() const;
    bool index_built() const;

private:
    struct LazyIndex {
        std::once_flag once;
        std::atomic<unsigned> queries{0};
        std::atomic<bool> built{false};
        KdTree tree;
    };

    void query_coords(const LocalPhasePoint& z, double* out) const;
    NearestHit finish(const LocalPhasePoint& z, std::size_t index) const;

    std::vector<DataPoint> points_;
    LocalMetric metric_;
    bool has_costs_ = false;
    KdTree flat_;  // single leaf: the linear scan
    std::shared_ptr<LazyIndex> index_;
};

/// argmin_y |z - y|^2 + cost(y) with lowest-index tie-breaking. Uses the set's index when
/// `m` equals the metric it was built with, otherwise scans under `m`.
NearestHit nearest_point(const LocalPhasePoint& z, const LocalDataSet& d, const LocalMetric& m);

struct DataProjection {
    std::vector<std::size_t> assignment;
    GlobalState y;
    double objective = 0.0;  // sum_e w_e (|z_e - y_e|^2 + cost_e)
};

DataProjection project_onto_D(const GlobalState& z, const std::vector<LocalDataSet>& sets, const GlobalMetric& gm);

/// Sum of the per-element local objectives of an assignment, weighted by w_e.
double assignment_objective(const GlobalState& z, const std::vector<LocalDataSet>& sets,
                            const std::vector<std::size_t>& assignment, const GlobalMetric& gm);

using MaterialLaw = std::variant<SlsParams, PlasticParams>;

double instantaneous_modulus(const MaterialLaw& law);

enum class Sampling { Uniform, Grid };

/// How the band width enters the generated cloud.
///  StrainNoise: strains sampled in the window and the emitted strain perturbed by U(-band/2, band/2).
///  Window: strains sampled uniformly in a window of full width `band` about the previous strain, no noise.
enum class BandMode { StrainNoise, Window };

struct WindowRule {
    /// Explicit half-width; 0 selects max(scale_factor * strain_scale, band_factor * band_width).
    double half_width = 0.0;
    double scale_factor = 4.0;
    double band_factor = 8.0;
    Sampling sampling = Sampling::Uniform;
    BandMode band_mode = BandMode::StrainNoise;
};

struct GeneratorSpec {
    MaterialLaw law = SlsParams{};
    int n_points = 256;
    double band_width = 0.0;
    WindowRule window;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Step data a generator needs beyond the conditioning state.
struct StepContext {
    double dt = 1.0;
    double strain_scale = 0.0;   // elastic strain estimate of the element
    bool instantaneous = false;  // dt -> 0 limit (initial loading)
};

/// Seed for the (step, element) stream derived from a run seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t step, std::uint64_t element);

double window_half_width(const GeneratorSpec& g, double strain_scale);

LocalDataSet generate_sls_set(const ConditioningState& cond, const GeneratorSpec& g, const StepContext& ctx,
                              std::mt19937_64& rng, const LocalMetric& metric);
LocalDataSet generate_plastic_set(const ConditioningState& cond, const GeneratorSpec& g, const StepContext& ctx,
                                  std::mt19937_64& rng, const LocalMetric& metric);

/// Generates D_{e,k+1} with the per-(step, element) stream of g.rng_seed.
LocalDataSet generate_local_set(const ConditioningState& cond, const GeneratorSpec& g, const StepContext& ctx,
                                std::uint64_t step, std::size_t element, const LocalMetric& metric);

/// q_acc + |E1^{-1}((E0 + E1) d_eps - d_sigma)|
double update_history_variable(const ConditioningState& cond, const LocalPhasePoint& z_new, const PlasticParams& p);

/// C(y) = sum_e 2 m_e s_e^2
double gaussian_fidelity_cost(std::span<const double> std_devs, std::span<const int> dims);
/// Local share 2 m s^2 of one data point.
double gaussian_point_cost(double std_dev, int dim);

/// Two-time history (z_k, z_{k+1}) recorded for one element.
struct HistoryEntry {
    LocalPhasePoint prior;
    LocalPhasePoint current;
};

/// Slot weights C_{e,0} (current state) and C_{e,1} (prior state).
struct HistoryWeights {
    double current = 1.0;
    double prior = 1.0;

    void validate() const;
};

struct HistoryRepository {
    std::vector<std::vector<HistoryEntry>> entries;  // one list per element

    std::size_t element_count() const { return entries.size(); }
};

/// argmin_j C0 |z - y_j|^2 + C1 |z_prev - y_prev_j|^2 over one element's repository.
NearestHit nearest_history(const LocalPhasePoint& z, const LocalPhasePoint& z_prev,
                           const std::vector<HistoryEntry>& entries, const HistoryWeights& w,
                           const LocalMetric& metric);

/// The repository as a data set of current states with cost (C1/C0)|z_prev - y_prev|^2;
/// nearest() on it minimizes the history objective divided by C0.
LocalDataSet history_data_set(const LocalPhasePoint& z_prev, const std::vector<HistoryEntry>& entries,
                              const HistoryWeights& w, const LocalMetric& metric);

/// CSV with header step,element,strain,stress,cost (multi-component values joined by ';').
void write_data_set_csv_header(std::ostream& out);
void write_data_set_csv(std::ostream& out, std::size_t step, std::size_t element, const LocalDataSet& set);
std::map<std::pair<std::size_t, std::size_t>, std::vector<DataPoint>> read_data_sets_csv(std::istream& in);

}  // namespace ddi
