#include "ddi/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = ".";
    std::string mesh;
    int runs = 0;
    std::string points;
    double band = -1.0;
    bool history_matching = false;
    bool dump_data = false;
    std::string kind = "visco";
};

void add_common(CLI::App* app, Common& c, bool study) {
    app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option_function<std::uint64_t>(
        "--seed", [&c](std::uint64_t s) { c.seed = s; c.seed_set = true; }, "master seed");
    app->add_option("--out", c.out, "output directory");
    app->add_flag("--history-matching", c.history_matching, "solve against a two-time history repository");
    if (!study) return;
    app->add_option("--mesh", c.mesh, "mesh file (default: generated lattice)")->check(CLI::ExistingFile);
    app->add_option("--runs", c.runs, "independent runs per data size")->check(CLI::PositiveNumber);
    app->add_option("--points", c.points, "comma-separated data sizes");
    app->add_option("--band", c.band, "band width")->check(CLI::NonNegativeNumber);
}

ddi::StudyConfig study_config(ddi::StudyKind kind, const Common& c) {
    auto cfg = kind == ddi::StudyKind::Viscoelastic ? ddi::StudyConfig::viscoelastic_defaults()
                                                    : ddi::StudyConfig::plastic_defaults();
    if (!c.config.empty()) ddi::apply_config_file(cfg, c.config);
    cfg.kind = kind;
    if (c.seed_set) cfg.seed = c.seed;
    if (!c.mesh.empty()) cfg.mesh_file = c.mesh;
    if (c.runs > 0) cfg.runs = c.runs;
    if (!c.points.empty()) cfg.points = ddi::parse_int_list(c.points);
    if (c.band >= 0.0) cfg.band = c.band;
    if (c.history_matching) cfg.history_matching = true;
    if (cfg.out_dir.empty() || c.out != ".") cfg.out_dir = c.out;
    cfg.validate();
    return cfg;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    const auto path = fs::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

int cmd_relaxation(const Common& c) {
    ddi::RelaxationConfig cfg;
    if (!c.config.empty()) {
        // Relaxation reads the material block of a study config.
        auto sc = ddi::StudyConfig::viscoelastic_defaults();
        ddi::apply_config_file(sc, c.config);
        cfg.sls = sc.sls;
    }
    if (c.seed_set) cfg.seed = c.seed;
    cfg.history_matching = c.history_matching;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = ddi::run_relaxation(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto f = open_out(c.out, "relaxation.csv");
    ddi::write_relaxation_csv(f, rep);
    std::cout << "relaxation: initial modulus " << rep.initial_modulus << ", max relative deviation "
              << rep.max_rel_deviation << ", " << secs << " s\n";
    return 0;
}

std::pair<int, int> probe_dof(const ddi::TrussProblem& p) {
    for (auto it = p.mesh.loads.rbegin(); it != p.mesh.loads.rend(); ++it) {
        if (p.system.free_index(it->node, it->dir) >= 0) return {it->node, it->dir};
    }
    for (int n = int(p.mesh.nodes.size()) - 1; n >= 0; --n) {
        for (int d = 0; d < 3; ++d) {
            if (p.system.free_index(n, d) >= 0) return {n, d};
        }
    }
    throw std::runtime_error("problem has no free degree of freedom to probe");
}

int cmd_single(ddi::StudyKind kind, const Common& c) {
    const auto cfg = study_config(kind, c);
    const int n = cfg.points.back();
    const auto problem = ddi::build_problem(cfg);
    const auto gen = ddi::build_generator(cfg, n, ddi::run_seed(cfg, n, 0));
    const auto solver = ddi::build_solver_config(cfg);

    std::ofstream dump;
    ddi::MarchOptions opts;
    if (c.dump_data) {
        dump = open_out(cfg.out_dir, "data_sets.csv");
        ddi::write_data_set_csv_header(dump);
        opts.data_dump = &dump;
    }
    auto traj = ddi::time_march(problem, gen, solver, opts);
    if (cfg.history_matching) {
        const auto repo = ddi::repository_from_trajectory(problem, gen, traj);
        traj = ddi::history_matching_march(problem, repo, cfg.history_weights, solver);
    }
    const auto ref = ddi::reference_march(problem, cfg.law());
    const double err = ddi::study_error(cfg, traj, ref, problem.metric);

    auto ft = open_out(cfg.out_dir, "trajectory.csv");
    ddi::write_trajectory_csv(ft, traj);
    auto fr = open_out(cfg.out_dir, "reference.csv");
    ddi::write_trajectory_csv(fr, ref);
    const auto [node, dir] = probe_dof(problem);
    auto fp = open_out(cfg.out_dir, "probe.csv");
    ddi::write_probe_csv(fp, problem, traj, ref, node, dir, 0);

    std::size_t iters = 0;
    for (const auto& s : traj.steps) iters += std::size_t(s.iterations);
    auto fs_ = open_out(cfg.out_dir, "summary.csv");
    fs_ << "kind,n_points,seed,bars,steps,error,total_iterations,nonconverged_steps\n" << std::setprecision(17)
        << ddi::to_string(kind) << ',' << n << ',' << cfg.seed << ',' << problem.system.element_count() << ','
        << traj.step_count() << ',' << err << ',' << iters << ',' << traj.nonconverged_steps.size() << '\n';
    std::cout << ddi::to_string(kind) << ": " << problem.system.element_count() << " bars, n_points " << n
              << ", error " << err << ", nonconverged steps " << traj.nonconverged_steps.size() << '\n';
    return 0;
}

int cmd_convergence(const Common& c) {
    ddi::StudyKind kind;
    if (c.kind == "visco") kind = ddi::StudyKind::Viscoelastic;
    else if (c.kind == "plastic") kind = ddi::StudyKind::Plastic;
    else throw std::runtime_error("--kind must be visco or plastic");
    const auto cfg = study_config(kind, c);
    const auto t0 = std::chrono::steady_clock::now();
    const auto study = ddi::run_convergence_study(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string stem = std::string("convergence_") + ddi::to_string(kind);
    auto f = open_out(cfg.out_dir, stem + ".csv");
    ddi::write_convergence_csv(f, study);
    auto s = open_out(cfg.out_dir, stem + "_summary.csv");
    ddi::write_convergence_summary(s, study, cfg);
    for (const auto& r : study.rows) {
        std::cout << "n_points " << r.n_points << "  mean " << r.mean_error << "  std " << r.std_error << '\n';
    }
    std::cout << "rate " << study.rate << " (" << secs << " s, nonconverged steps " << study.nonconverged_steps
              << ")\n";
    return 0;
}

int cmd_oracle(const Common& c) {
    const int instances = c.runs > 0 ? c.runs : 100;
    const auto rep = ddi::run_oracle_check(c.seed_set ? c.seed : 1, instances);
    auto f = open_out(c.out, "oracle_check.csv");
    f << "instances,oracle_not_worse,fixed_point_consistent,fixed_point_global,max_violation\n"
      << rep.instances << ',' << rep.oracle_not_worse << ',' << rep.fixed_point_consistent << ','
      << rep.fixed_point_global << ',' << rep.max_violation << '\n';
    std::cout << "oracle-check: " << rep.instances << " instances, oracle not worse " << rep.oracle_not_worse
              << ", fixed point consistent " << rep.fixed_point_consistent << ", plain fixed point global "
              << rep.fixed_point_global << '\n';
    const bool ok = rep.oracle_not_worse == rep.instances && rep.fixed_point_consistent == rep.instances;
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-Driven inelasticity for trusses"};
    app.require_subcommand(1);

    Common relax, visco, plastic, conv, oracle;
    auto* r = app.add_subcommand("relaxation", "single-bar stress relaxation against the closed form");
    add_common(r, relax, false);
    auto* v = app.add_subcommand("visco", "one viscoelastic truss trajectory and its reference");
    add_common(v, visco, true);
    v->add_flag("--dump-data", visco.dump_data, "write every generated data set");
    auto* p = app.add_subcommand("plastic", "one elastic-plastic truss trajectory and its reference");
    add_common(p, plastic, true);
    p->add_flag("--dump-data", plastic.dump_data, "write every generated data set");
    auto* cv = app.add_subcommand("convergence", "error against data size over independent runs");
    add_common(cv, conv, true);
    cv->add_option("--kind", conv.kind, "visco or plastic")->check(CLI::IsMember({"visco", "plastic"}));
    auto* o = app.add_subcommand("oracle-check", "fixed point against exhaustive enumeration on small systems");
    o->add_option_function<std::uint64_t>(
        "--seed", [&oracle](std::uint64_t s) { oracle.seed = s; oracle.seed_set = true; }, "seed");
    o->add_option("--runs", oracle.runs, "number of random instances")->check(CLI::PositiveNumber);
    o->add_option("--out", oracle.out, "output directory");

    CLI11_PARSE(app, argc, argv);
    try {
        if (r->parsed()) return cmd_relaxation(relax);
        if (v->parsed()) return cmd_single(ddi::StudyKind::Viscoelastic, visco);
        if (p->parsed()) return cmd_single(ddi::StudyKind::Plastic, plastic);
        if (cv->parsed()) return cmd_convergence(conv);
        if (o->parsed()) return cmd_oracle(oracle);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
