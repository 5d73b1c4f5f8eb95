#include "ddi/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace ddi {

double fit_loglog_slope(const std::vector<ConvergenceRow>& rows) {
    if (rows.size() < 2) throw ContractViolation("rate fit needs at least two rows");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& r : rows) {
        if (!(r.mean_error > 0.0) || r.n_points <= 0) throw ContractViolation("rate fit needs positive errors");
        const double x = std::log(static_cast<double>(r.n_points));
        const double y = std::log(r.mean_error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(rows.size());
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0)) throw ContractViolation("rate fit needs distinct data sizes");
    return (n * sxy - sx * sy) / den;
}

StudyConfig StudyConfig::viscoelastic_defaults() {
    StudyConfig c;
    c.kind = StudyKind::Viscoelastic;
    c.band = 0.03;
    c.lattice.tip_load = -40.0;
    c.window.band_mode = BandMode::Window;
    c.load_program = {{0.0, 0.0}, {10.0, 1.0}, {50.0, 1.0}, {60.0, 0.0}, {100.0, 0.0}};
    return c;
}

StudyConfig StudyConfig::plastic_defaults() {
    StudyConfig c;
    c.kind = StudyKind::Plastic;
    c.band = 0.04;
    c.lattice.tip_load = -80.0;
    c.window.band_mode = BandMode::Window;
    c.load_program = {{0.0, 0.0}, {20.0, 0.8}, {60.0, -0.9}, {100.0, 1.0}};
    return c;
}

MaterialLaw StudyConfig::law() const {
    if (kind == StudyKind::Viscoelastic) return sls;
    return plastic;
}

void StudyConfig::validate() const {
    if (points.empty()) throw ContractViolation("no data sizes to sweep");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i] < 1) throw ContractViolation("data sizes must be positive");
        if (i > 0 && points[i] <= points[i - 1]) throw ContractViolation("data sizes must be strictly increasing");
    }
    if (runs < 1) throw ContractViolation("runs must be at least 1");
    if (!(band >= 0.0)) throw ContractViolation("band width must be nonnegative");
    if (!(dt > 0.0) || !(t_end > 0.0)) throw ContractViolation("time grid needs positive dt and t_end");
    if (!(metric_modulus >= 0.0)) throw ContractViolation("metric modulus must be nonnegative");
    if (max_iters < 1) throw ContractViolation("max_iters must be positive");
    if (threads < 0) throw ContractViolation("threads must be nonnegative");
    if (load_program.empty()) throw ContractViolation("load program is empty");
    sls.validate();
    plastic.validate();
    history_weights.validate();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || !std::isfinite(x)) throw ContractViolation("bad number for " + key + ": '" + v + "'");
    return x;
}

long long parse_integer(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size()) throw ContractViolation("bad integer for " + key + ": '" + v + "'");
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        if (!v.empty() && v[0] != '-') x = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ContractViolation("bad unsigned integer for " + key + ": '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ContractViolation("bad boolean for " + key + ": '" + v + "'");
}

int parse_dir(const std::string& key, const std::string& v) {
    if (v == "x") return 0;
    if (v == "y") return 1;
    if (v == "z") return 2;
    const auto d = parse_integer(key, v);
    if (d < 0 || d > 2) throw ContractViolation(key + " must be x, y, z or 0..2");
    return static_cast<int>(d);
}

// "t:v, t:v, ..."
std::vector<std::pair<double, double>> parse_program(const std::string& key, const std::string& v) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ContractViolation(key + " entries are time:value");
        out.emplace_back(parse_real(key, trim(item.substr(0, colon))), parse_real(key, trim(item.substr(colon + 1))));
    }
    if (out.empty()) throw ContractViolation(key + " is empty");
    return out;
}

using Setter = std::function<void(StudyConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"kind",
         [](StudyConfig& c, const std::string& k, const std::string& v) {
             if (v == "visco" || v == "viscoelastic") c.kind = StudyKind::Viscoelastic;
             else if (v == "plastic") c.kind = StudyKind::Plastic;
             else throw ContractViolation("bad value for " + k + ": '" + v + "'");
         }},
        {"mesh_file", [](StudyConfig& c, const std::string&, const std::string& v) { c.mesh_file = v; }},
        {"lattice.bays_x",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.bays_x = int(parse_integer(k, v)); }},
        {"lattice.bays_y",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.bays_y = int(parse_integer(k, v)); }},
        {"lattice.levels",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.levels = int(parse_integer(k, v)); }},
        {"lattice.spacing",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.spacing = parse_real(k, v); }},
        {"lattice.face_diagonals",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.face_diagonals = parse_bool(k, v); }},
        {"lattice.body_diagonals",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.body_diagonals = parse_bool(k, v); }},
        {"lattice.area", [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.area = parse_real(k, v); }},
        {"lattice.tip_load",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.tip_load = parse_real(k, v); }},
        {"lattice.tip_direction",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.lattice.tip_direction = parse_dir(k, v); }},
        {"sls.e0", [](StudyConfig& c, const std::string& k, const std::string& v) { c.sls.e0 = parse_real(k, v); }},
        {"sls.e1", [](StudyConfig& c, const std::string& k, const std::string& v) { c.sls.e1 = parse_real(k, v); }},
        {"sls.tau1", [](StudyConfig& c, const std::string& k, const std::string& v) { c.sls.tau1 = parse_real(k, v); }},
        {"plastic.e0", [](StudyConfig& c, const std::string& k, const std::string& v) { c.plastic.e0 = parse_real(k, v); }},
        {"plastic.e1", [](StudyConfig& c, const std::string& k, const std::string& v) { c.plastic.e1 = parse_real(k, v); }},
        {"plastic.sigma1",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.plastic.sigma1 = parse_real(k, v); }},
        {"plastic.h", [](StudyConfig& c, const std::string& k, const std::string& v) { c.plastic.h = parse_real(k, v); }},
        {"metric_modulus",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.metric_modulus = parse_real(k, v); }},
        {"points", [](StudyConfig& c, const std::string&, const std::string& v) { c.points = parse_int_list(v); }},
        {"runs", [](StudyConfig& c, const std::string& k, const std::string& v) { c.runs = int(parse_integer(k, v)); }},
        {"band", [](StudyConfig& c, const std::string& k, const std::string& v) { c.band = parse_real(k, v); }},
        {"window.half_width",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.window.half_width = parse_real(k, v); }},
        {"window.scale_factor",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.window.scale_factor = parse_real(k, v); }},
        {"window.band_factor",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.window.band_factor = parse_real(k, v); }},
        {"window.sampling",
         [](StudyConfig& c, const std::string& k, const std::string& v) {
             if (v == "uniform") c.window.sampling = Sampling::Uniform;
             else if (v == "grid") c.window.sampling = Sampling::Grid;
             else throw ContractViolation("bad value for " + k + ": '" + v + "'");
         }},
        {"window.band_mode",
         [](StudyConfig& c, const std::string& k, const std::string& v) {
             if (v == "noise") c.window.band_mode = BandMode::StrainNoise;
             else if (v == "window") c.window.band_mode = BandMode::Window;
             else throw ContractViolation("bad value for " + k + ": '" + v + "'");
         }},
        {"dt", [](StudyConfig& c, const std::string& k, const std::string& v) { c.dt = parse_real(k, v); }},
        {"t_end", [](StudyConfig& c, const std::string& k, const std::string& v) { c.t_end = parse_real(k, v); }},
        {"load_program",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.load_program = parse_program(k, v); }},
        {"seed", [](StudyConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
        {"max_iters", [](StudyConfig& c, const std::string& k, const std::string& v) { c.max_iters = int(parse_integer(k, v)); }},
        {"history_matching",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.history_matching = parse_bool(k, v); }},
        {"history.current",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.history_weights.current = parse_real(k, v); }},
        {"history.prior",
         [](StudyConfig& c, const std::string& k, const std::string& v) { c.history_weights.prior = parse_real(k, v); }},
        {"threads", [](StudyConfig& c, const std::string& k, const std::string& v) { c.threads = int(parse_integer(k, v)); }},
        {"out_dir", [](StudyConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
    };
    return table;
}

}  // namespace

void apply_config_text(StudyConfig& cfg, std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ContractViolation("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw ContractViolation("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        it->second(cfg, key, value);
    }
}

void apply_config_file(StudyConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    apply_config_text(cfg, in);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<int>(parse_integer("points", item)));
    }
    if (out.empty()) throw ContractViolation("empty integer list");
    return out;
}

TrussProblem build_problem(const StudyConfig& cfg) {
    TrussMesh mesh = cfg.mesh_file.empty() ? generate_lattice_truss(cfg.lattice) : read_mesh_file(cfg.mesh_file);
    const double modulus = cfg.metric_modulus > 0.0 ? cfg.metric_modulus : instantaneous_modulus(cfg.law());
    return TrussProblem::make(std::move(mesh), modulus, Schedule(cfg.load_program),
                              uniform_time_grid(cfg.t_end, cfg.dt));
}

GeneratorSpec build_generator(const StudyConfig& cfg, int n_points, std::uint64_t seed) {
    GeneratorSpec g;
    g.law = cfg.law();
    g.n_points = n_points;
    g.band_width = cfg.band;
    g.window = cfg.window;
    g.rng_seed = seed;
    return g;
}

SolverConfig build_solver_config(const StudyConfig& cfg) {
    SolverConfig s;
    s.max_fixed_point_iters = cfg.max_iters;
    s.init_strategy = InitStrategy::PreviousState;
    s.rng_seed = cfg.seed;
    return s;
}

double study_error(const StudyConfig& cfg, const Trajectory& traj, const Trajectory& ref, const GlobalMetric& gm) {
    if (cfg.kind == StudyKind::Viscoelastic) return weighted_l2_error(traj, ref, cfg.sls.tau1, gm);
    return bv_error(traj, ref, gm);
}

std::uint64_t run_seed(const StudyConfig& cfg, int n_points, int run) {
    return derive_seed(cfg.seed, static_cast<std::uint64_t>(n_points), static_cast<std::uint64_t>(run));
}

namespace {

Trajectory dd_trajectory(const StudyConfig& cfg, const TrussProblem& problem, int n_points, int run) {
    const auto gen = build_generator(cfg, n_points, run_seed(cfg, n_points, run));
    const auto solver = build_solver_config(cfg);
    Trajectory traj = time_march(problem, gen, solver);
    if (!cfg.history_matching) return traj;
    const auto repo = repository_from_trajectory(problem, gen, traj);
    return history_matching_march(problem, repo, cfg.history_weights, solver);
}

}  // namespace

SingleRun run_single(const StudyConfig& cfg, int n_points, int run) {
    cfg.validate();
    const auto problem = build_problem(cfg);
    SingleRun out;
    out.reference = reference_march(problem, cfg.law());
    out.dd = dd_trajectory(cfg, problem, n_points, run);
    out.error = study_error(cfg, out.dd, out.reference, problem.metric);
    return out;
}

ConvergenceStudy run_convergence_study(const StudyConfig& cfg) {
    cfg.validate();
    const auto problem = build_problem(cfg);
    const auto reference = reference_march(problem, cfg.law());

    struct Task {
        std::size_t row;
        int run;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        for (int r = 0; r < cfg.runs; ++r) tasks.push_back({i, r});
    }
    std::vector<std::vector<double>> errors(cfg.points.size(), std::vector<double>(std::size_t(cfg.runs)));
    std::vector<std::vector<std::size_t>> nonconv(cfg.points.size(), std::vector<std::size_t>(std::size_t(cfg.runs)));

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::string first_error;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) return;
            const auto& t = tasks[i];
            const int n = cfg.points[t.row];
            try {
                const auto traj = dd_trajectory(cfg, problem, n, t.run);
                errors[t.row][std::size_t(t.run)] = study_error(cfg, traj, reference, problem.metric);
                nonconv[t.row][std::size_t(t.run)] = traj.nonconverged_steps.size();
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) {
                    first_error = "run n_points=" + std::to_string(n) + " run=" + std::to_string(t.run) +
                                  " failed: " + e.what();
                }
            }
        }
    };

    unsigned n_threads = cfg.threads > 0 ? unsigned(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
    n_threads = unsigned(std::min<std::size_t>(n_threads, tasks.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed) throw std::runtime_error(first_error);

    ConvergenceStudy study;
    study.kind = cfg.kind;
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        ConvergenceRow row;
        row.n_points = cfg.points[i];
        row.errors = errors[i];
        double sum = 0.0;
        for (double e : row.errors) sum += e;
        row.mean_error = sum / double(row.errors.size());
        double var = 0.0;
        for (double e : row.errors) var += (e - row.mean_error) * (e - row.mean_error);
        row.std_error = row.errors.size() > 1 ? std::sqrt(var / double(row.errors.size() - 1)) : 0.0;
        for (std::size_t c : nonconv[i]) study.nonconverged_steps += c;
        study.rows.push_back(std::move(row));
    }
    if (study.rows.size() >= 2) {
        bool positive = true;
        for (const auto& r : study.rows) positive = positive && r.mean_error > 0.0;
        if (positive) {
            study.slope = fit_loglog_slope(study.rows);
            study.rate = -study.slope;
        }
    }
    return study;
}

TrussProblem relaxation_problem(const RelaxationConfig& cfg) {
    if (cfg.steps < 1) throw ContractViolation("relaxation needs at least one step");
    TrussMesh mesh;
    mesh.nodes = {Eigen::Vector3d(0.0, 0.0, 0.0), Eigen::Vector3d(1.0, 0.0, 0.0)};
    mesh.bars = {Bar{0, 1, 1.0}};
    mesh.supports = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}};
    mesh.prescribed = {{1, 0, 0}};
    mesh.programs[0] = Schedule({{0.0, cfg.eps_bar}});
    return TrussProblem::make(std::move(mesh), cfg.metric_modulus, Schedule({{0.0, 0.0}}),
                              uniform_time_grid(cfg.dt * cfg.steps, cfg.dt));
}

RelaxationReport run_relaxation(const RelaxationConfig& cfg) {
    cfg.sls.validate();
    const auto problem = relaxation_problem(cfg);
    GeneratorSpec gen;
    gen.law = cfg.sls;
    gen.n_points = cfg.n_points;
    gen.band_width = cfg.band;
    gen.window.sampling = cfg.sampling;
    gen.rng_seed = cfg.seed;
    SolverConfig solver;
    solver.rng_seed = cfg.seed;
    MarchOptions opts;
    opts.initial = InitialResponse::Instantaneous;

    Trajectory traj = time_march(problem, gen, solver, opts);
    if (cfg.history_matching) {
        const auto repo = repository_from_trajectory(problem, gen, traj, opts);
        traj = history_matching_march(problem, repo, HistoryWeights{}, solver, opts);
    }

    RelaxationReport r;
    r.times = traj.times;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& z = traj.states[k].points[0];
        r.strain.push_back(z.strain(0));
        r.stress.push_back(z.stress(0));
        const double exact = sls_relaxation_exact(int(k), cfg.sls, cfg.eps_bar, cfg.dt);
        r.exact.push_back(exact);
        r.max_rel_deviation = std::max(r.max_rel_deviation, std::abs(z.stress(0) - exact) / std::abs(exact));
    }
    r.initial_modulus = r.stress.front() / cfg.eps_bar;
    return r;
}

void write_relaxation_csv(std::ostream& out, const RelaxationReport& r) {
    out << "time,strain,stress,exact,rel_deviation\n" << std::setprecision(17);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        out << r.times[k] << ',' << r.strain[k] << ',' << r.stress[k] << ',' << r.exact[k] << ','
            << std::abs(r.stress[k] - r.exact[k]) / std::abs(r.exact[k]) << '\n';
    }
}

void write_convergence_csv(std::ostream& out, const ConvergenceStudy& s) {
    out << "n_points,mean_error,std_error";
    const std::size_t runs = s.rows.empty() ? 0 : s.rows.front().errors.size();
    for (std::size_t r = 0; r < runs; ++r) out << ",run_" << r;
    out << '\n' << std::setprecision(17);
    for (const auto& row : s.rows) {
        out << row.n_points << ',' << row.mean_error << ',' << row.std_error;
        for (double e : row.errors) out << ',' << e;
        out << '\n';
    }
}

void write_convergence_summary(std::ostream& out, const ConvergenceStudy& s, const StudyConfig& cfg) {
    out << "kind,runs,band,seed,slope,rate,nonconverged_steps\n" << std::setprecision(17);
    out << to_string(s.kind) << ',' << cfg.runs << ',' << cfg.band << ',' << cfg.seed << ',' << s.slope << ','
        << s.rate << ',' << s.nonconverged_steps << '\n';
}

void write_probe_csv(std::ostream& out, const TrussProblem& problem, const Trajectory& dd, const Trajectory& ref,
                     int probe_node, int probe_dir, std::size_t probe_bar) {
    const int idx = problem.system.free_index(probe_node, probe_dir);
    if (idx < 0) throw ContractViolation("probe DOF is not free");
    if (probe_bar >= problem.system.element_count()) throw ContractViolation("probe bar out of range");
    const double area = problem.mesh.bars[probe_bar].area;
    out << "time,displacement_ref,displacement_dd,axial_force_ref,axial_force_dd\n" << std::setprecision(17);
    for (std::size_t k = 0; k < dd.times.size(); ++k) {
        out << dd.times[k] << ',' << ref.displacements[k](idx) << ',' << dd.displacements[k](idx) << ','
            << area * ref.states[k].points[probe_bar].stress(0) << ','
            << area * dd.states[k].points[probe_bar].stress(0) << '\n';
    }
}

const char* to_string(StudyKind k) { return k == StudyKind::Viscoelastic ? "visco" : "plastic"; }

}  // namespace ddi
