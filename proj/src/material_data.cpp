#include "ddi/material_data.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ddi {

namespace {

constexpr int kMaxWhitened = 2 * kMaxLocalDim + 1;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Samples strains in the window about the previous strain and emits (strain + noise, law(strain)).
template <class Law>
std::vector<DataPoint> sample_points(const ConditioningState& cond, const GeneratorSpec& g, const StepContext& ctx,
                                     std::mt19937_64& rng, Law&& law) {
    const int dim = static_cast<int>(cond.prev_strain.size());
    const auto n = static_cast<std::size_t>(g.n_points);
    const double hw = window_half_width(g, ctx.strain_scale);
    const bool noisy = g.window.band_mode == BandMode::StrainNoise && g.band_width > 0.0;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    // evenly spaced, symmetric about the previous strain (which is a node when n is odd)
    const double h = n > 1 ? 2.0 * hw / static_cast<double>(n - 1) : 0.0;

    std::vector<DataPoint> pts;
    pts.reserve(n);
    LocalVector strain(dim), emitted(dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (g.window.sampling == Sampling::Grid) {
            const double offset = (static_cast<double>(i) - static_cast<double>(n - 1) / 2.0) * h;
            strain = cond.prev_strain.array() + offset;
        } else {
            for (int c = 0; c < dim; ++c) strain(c) = cond.prev_strain(c) + hw * unit(rng);
        }
        emitted = strain;
        if (noisy) {
            for (int c = 0; c < dim; ++c) emitted(c) += 0.5 * g.band_width * unit(rng);
        }
        pts.emplace_back(emitted, law(strain));
    }
    return pts;
}

std::string join(const LocalVector& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v(i);
    return os.str();
}

LocalVector split(const std::string& s) {
    std::vector<double> vals;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ';')) vals.push_back(std::stod(tok));
    if (vals.empty() || vals.size() > kMaxLocalDim) throw ContractViolation("bad vector cell '" + s + "'");
    LocalVector v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
    return v;
}

}  // namespace

DataPoint::DataPoint(LocalVector eps, LocalVector sig, double cost)
    : strain(std::move(eps)), stress(std::move(sig)), fidelity_cost(cost) {
    if (strain.size() != stress.size() || strain.size() < 1) throw ContractViolation("data point dimension mismatch");
    if (!strain.allFinite() || !stress.allFinite() || !std::isfinite(cost)) {
        throw ContractViolation("data point has non-finite entries");
    }
    if (cost < 0.0) throw ContractViolation("fidelity cost must be nonnegative");
}

DataPoint::DataPoint(double eps, double sig, double cost)
    : DataPoint(LocalVector::Constant(1, eps), LocalVector::Constant(1, sig), cost) {}

LocalDataSet::LocalDataSet(std::vector<DataPoint> points, const LocalMetric& metric)
    : points_(std::move(points)), metric_(metric) {
    if (points_.empty()) throw ContractViolation("local data set must not be empty");
    const int dim = metric_.dim();
    for (const auto& p : points_) {
        if (p.strain.size() != dim) throw ContractViolation("data point dimension does not match the metric");
        if (p.fidelity_cost > 0.0) has_costs_ = true;
    }
    const int wdim = 2 * dim + (has_costs_ ? 1 : 0);
    std::vector<double> coords(points_.size() * static_cast<std::size_t>(wdim));
    for (std::size_t i = 0; i < points_.size(); ++i) {
        double* row = coords.data() + i * static_cast<std::size_t>(wdim);
        metric_.whiten(points_[i].strain, points_[i].stress, row);
        if (has_costs_) row[2 * dim] = std::sqrt(points_[i].fidelity_cost);
    }
    flat_ = KdTree(std::move(coords), wdim, static_cast<int>(points_.size()));
    index_ = std::make_shared<LazyIndex>();
}

void LocalDataSet::build_index() const {
    std::call_once(index_->once, [this] {
        std::vector<double> coords(flat_.point(0), flat_.point(0) + flat_.size() * static_cast<std::size_t>(flat_.dim()));
        index_->tree = KdTree(std::move(coords), flat_.dim(), 8);
        index_->built.store(true, std::memory_order_release);
    });
}

bool LocalDataSet::index_built() const { return index_->built.load(std::memory_order_acquire); }

void LocalDataSet::query_coords(const LocalPhasePoint& z, double* out) const {
    metric_.whiten(z, out);
    if (has_costs_) out[2 * metric_.dim()] = 0.0;
}

NearestHit LocalDataSet::finish(const LocalPhasePoint& z, std::size_t index) const {
    const auto& y = points_[index];
    return {index, local_distance_sq(z, y.phase_point(), metric_) + y.fidelity_cost};
}

NearestHit LocalDataSet::nearest(const LocalPhasePoint& z) const {
    std::array<double, kMaxWhitened> q{};
    query_coords(z, q.data());
    if (points_.size() < kScanThreshold) return finish(z, flat_.nearest_scan(q.data()).index);
    if (!index_built()) {
        if (index_->queries.fetch_add(1, std::memory_order_relaxed) + 1 < kLazyQueries) {
            return finish(z, flat_.nearest_scan(q.data()).index);
        }
        build_index();
    }
    return finish(z, index_->tree.nearest(q.data()).index);
}

NearestHit LocalDataSet::nearest_scan(const LocalPhasePoint& z) const {
    std::array<double, kMaxWhitened> q{};
    query_coords(z, q.data());
    return finish(z, flat_.nearest_scan(q.data()).index);
}

NearestHit nearest_point(const LocalPhasePoint& z, const LocalDataSet& d, const LocalMetric& m) {
    if (m == d.metric()) return d.nearest(z);
    NearestHit best{0, local_distance_sq(z, d[0].phase_point(), m) + d[0].fidelity_cost};
    for (std::size_t i = 1; i < d.size(); ++i) {
        const double v = local_distance_sq(z, d[i].phase_point(), m) + d[i].fidelity_cost;
        if (v < best.objective) best = {i, v};
    }
    return best;
}

DataProjection project_onto_D(const GlobalState& z, const std::vector<LocalDataSet>& sets, const GlobalMetric& gm) {
    if (z.size() != sets.size() || z.size() != gm.size()) {
        throw ContractViolation("one data set per element is required");
    }
    DataProjection out;
    out.assignment.resize(z.size());
    out.y.points.resize(z.size());
    for (std::size_t e = 0; e < z.size(); ++e) {
        const NearestHit hit = nearest_point(z.points[e], sets[e], gm.locals[e]);
        out.assignment[e] = hit.index;
        out.y.points[e] = sets[e][hit.index].phase_point();
        out.objective += gm.weights[e] * hit.objective;
    }
    return out;
}

double assignment_objective(const GlobalState& z, const std::vector<LocalDataSet>& sets,
                            const std::vector<std::size_t>& assignment, const GlobalMetric& gm) {
    double sum = 0.0;
    for (std::size_t e = 0; e < z.size(); ++e) {
        const auto& y = sets[e][assignment[e]];
        sum += gm.weights[e] * (local_distance_sq(z.points[e], y.phase_point(), gm.locals[e]) + y.fidelity_cost);
    }
    return sum;
}

double instantaneous_modulus(const MaterialLaw& law) {
    return std::visit([](const auto& p) { return p.instantaneous_modulus(); }, law);
}

void GeneratorSpec::validate() const {
    if (n_points < 1) throw ContractViolation("generator needs at least one point");
    if (!(band_width >= 0.0)) throw ContractViolation("band width must be nonnegative");
    if (!(window.half_width >= 0.0)) throw ContractViolation("window half-width must be nonnegative");
    std::visit([](const auto& p) { p.validate(); }, law);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t step, std::uint64_t element) {
    std::uint64_t x = splitmix64(master);
    x = splitmix64(x ^ splitmix64(step + 0x632BE59BD9B4E019ULL));
    x = splitmix64(x ^ splitmix64(element + 0x8CB92BA72F3D8DD7ULL));
    return x;
}

double window_half_width(const GeneratorSpec& g, double strain_scale) {
    if (g.window.band_mode == BandMode::Window) return 0.5 * g.band_width;
    if (g.window.half_width > 0.0) return g.window.half_width;
    return std::max(g.window.scale_factor * std::abs(strain_scale), g.window.band_factor * g.band_width);
}

LocalDataSet generate_sls_set(const ConditioningState& cond, const GeneratorSpec& g, const StepContext& ctx,
                              std::mt19937_64& rng, const LocalMetric& metric) {
    const auto* p = std::get_if<SlsParams>(&g.law);
    if (!p) throw ContractViolation("generate_sls_set requires a Standard Linear Solid law");
    g.validate();
    if (ctx.instantaneous) {
        return {sample_points(cond, g, ctx, rng,
                              [&](const LocalVector& eps) { return sls_instantaneous_update(eps, cond, *p); }),
                metric};
    }
    if (!(ctx.dt > 0.0)) throw ContractViolation("time step must be positive");
    return {sample_points(cond, g, ctx, rng,
                          [&](const LocalVector& eps) { return sls_stress_update(eps, cond, *p, ctx.dt); }),
            metric};
}

LocalDataSet generate_plastic_set(const ConditioningState& cond, const GeneratorSpec& g, const StepContext& ctx,
                                  std::mt19937_64& rng, const LocalMetric& metric) {
    const auto* p = std::get_if<PlasticParams>(&g.law);
    if (!p) throw ContractViolation("generate_plastic_set requires an isotropic-kinematic hardening law");
    g.validate();
    const LocalVector q_prev = plastic_internal_strain(cond.prev_strain, cond.prev_stress, *p);
    return {sample_points(cond, g, ctx, rng,
                          [&](const LocalVector& eps) {
                              return plastic_return_map(eps, q_prev, cond.q_acc, *p).stress;
                          }),
            metric};
}

LocalDataSet generate_local_set(const ConditioningState& cond, const GeneratorSpec& g, const StepContext& ctx,
                                std::uint64_t step, std::size_t element, const LocalMetric& metric) {
    std::mt19937_64 rng(derive_seed(g.rng_seed, step, element));
    if (std::holds_alternative<SlsParams>(g.law)) return generate_sls_set(cond, g, ctx, rng, metric);
    return generate_plastic_set(cond, g, ctx, rng, metric);
}

double update_history_variable(const ConditioningState& cond, const LocalPhasePoint& z_new, const PlasticParams& p) {
    const LocalVector dq =
        ((p.e0 + p.e1) * (z_new.strain - cond.prev_strain) - (z_new.stress - cond.prev_stress)) / p.e1;
    return cond.q_acc + dq.norm();
}

double gaussian_point_cost(double std_dev, int dim) {
    if (!(std_dev >= 0.0)) throw ContractViolation("standard deviation must be nonnegative");
    return 2.0 * dim * std_dev * std_dev;
}

double gaussian_fidelity_cost(std::span<const double> std_devs, std::span<const int> dims) {
    if (std_devs.size() != dims.size()) throw ContractViolation("one dimension per standard deviation");
    double c = 0.0;
    for (std::size_t e = 0; e < std_devs.size(); ++e) c += gaussian_point_cost(std_devs[e], dims[e]);
    return c;
}

void HistoryWeights::validate() const {
    if (!(current > 0.0) || !(prior >= 0.0)) {
        throw ContractViolation("history weights: current slot must be positive, prior slot nonnegative");
    }
}

NearestHit nearest_history(const LocalPhasePoint& z, const LocalPhasePoint& z_prev,
                           const std::vector<HistoryEntry>& entries, const HistoryWeights& w,
                           const LocalMetric& metric) {
    if (entries.empty()) throw ContractViolation("history repository is empty");
    w.validate();
    NearestHit best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < entries.size(); ++j) {
        const double v = w.current * local_distance_sq(z, entries[j].current, metric) +
                         w.prior * local_distance_sq(z_prev, entries[j].prior, metric);
        if (v < best.objective) best = {j, v};
    }
    return best;
}

LocalDataSet history_data_set(const LocalPhasePoint& z_prev, const std::vector<HistoryEntry>& entries,
                              const HistoryWeights& w, const LocalMetric& metric) {
    if (entries.empty()) throw ContractViolation("history repository is empty");
    w.validate();
    const double ratio = w.prior / w.current;
    std::vector<DataPoint> pts;
    pts.reserve(entries.size());
    for (const auto& h : entries) {
        const double cost = ratio > 0.0 ? ratio * local_distance_sq(z_prev, h.prior, metric) : 0.0;
        pts.emplace_back(h.current.strain, h.current.stress, cost);
    }
    return {std::move(pts), metric};
}

void write_data_set_csv_header(std::ostream& out) { out << "step,element,strain,stress,cost\n"; }

void write_data_set_csv(std::ostream& out, std::size_t step, std::size_t element, const LocalDataSet& set) {
    for (const auto& p : set.points()) {
        std::ostringstream cost;
        cost << std::setprecision(17) << p.fidelity_cost;
        out << step << ',' << element << ',' << join(p.strain) << ',' << join(p.stress) << ',' << cost.str() << '\n';
    }
}

std::map<std::pair<std::size_t, std::size_t>, std::vector<DataPoint>> read_data_sets_csv(std::istream& in) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<DataPoint>> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("step", 0) == 0) continue;
        }
        std::array<std::string, 5> cells;
        std::istringstream row(line);
        for (auto& c : cells) {
            if (!std::getline(row, c, ',')) throw ContractViolation("data set row needs 5 columns: " + line);
        }
        const auto key = std::make_pair(static_cast<std::size_t>(std::stoull(cells[0])),
                                        static_cast<std::size_t>(std::stoull(cells[1])));
        out[key].emplace_back(split(cells[2]), split(cells[3]), std::stod(cells[4]));
    }
    return out;
}

}  // namespace ddi
