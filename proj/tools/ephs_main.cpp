#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "ephs/assemble.hpp"
#include "ephs/lang.hpp"
#include "ephs/serialize.hpp"
#include "ephs/sim.hpp"

namespace {

using namespace ephs;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitDiverged = 3;

double default_theta0() {
  if (const char* env = std::getenv("EPHS_THETA0")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0) return v;
  }
  return 298.15;
}

struct LoadedModel {
  core::FlatModel flat;
  lang::ParsedModel parsed;
};

// parse + bind + flatten; prints diagnostics and returns nullopt on failure
std::optional<LoadedModel> load_model(const std::string& path) {
  auto res = lang::parse_file(path);
  if (!res.ok()) {
    for (const auto& d : res.diagnostics) std::cerr << path << ":" << d.to_string() << "\n";
    return std::nullopt;
  }
  try {
    auto built = lang::to_model(*res.model);
    const auto diags = core::validate_pattern(built.root);
    if (!diags.empty()) {
      for (const auto& d : diags)
        std::cerr << "[" << d.rule << "] " << d.location << ": " << d.message << "\n";
      return std::nullopt;
    }
    LoadedModel out{core::flatten(built.root, built.binding), std::move(*res.model)};
    const auto flat_diags = core::validate_pattern(out.flat.pattern);
    if (!flat_diags.empty()) {
      for (const auto& d : flat_diags)
        std::cerr << "[" << d.rule << "] " << d.location << ": " << d.message << "\n";
      return std::nullopt;
    }
    return out;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return std::nullopt;
  }
}

// "--set b1.p=0,0,0.6,0,0,0" / "--set-pose b1.q=0,0,1[,ax,ay,az,angle]"
bool apply_sets(const assemble::DAESystem& sys, sim::SystemState& st,
                const std::vector<std::string>& sets, const std::vector<std::string>& poses) {
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
      const auto pos = s.find(sep, start);
      out.push_back(s.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  };
  try {
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail("BadParam", "--set expects junction=v1[,v2,...]");
      const auto parts = split(kv.substr(eq + 1), ',');
      Eigen::VectorXd v(parts.size());
      for (size_t i = 0; i < parts.size(); ++i) v[i] = std::stod(parts[i]);
      sys.set_vector_state(st.x, kv.substr(0, eq), v);
    }
    for (const auto& kv : poses) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        fail("BadParam", "--set-pose expects junction=rx,ry,rz[,ax,ay,az,angle]");
      const auto parts = split(kv.substr(eq + 1), ',');
      if (parts.size() != 3 && parts.size() != 7)
        fail("BadParam", "--set-pose expects 3 or 7 numbers");
      geom::Vec3 r(std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]));
      geom::Mat3 R = geom::Mat3::Identity();
      if (parts.size() == 7) {
        geom::Vec3 axis(std::stod(parts[3]), std::stod(parts[4]), std::stod(parts[5]));
        R = geom::exp_so3(axis.normalized() * std::stod(parts[6]));
      }
      sys.set_pose_state(st.x, kv.substr(0, eq),
                         geom::make_element(R, r, geom::Convention::SemidirectProduct));
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return false;
  }
  return true;
}

int cmd_run(const std::string& file, double t_end, double dt, const std::string& method,
            const std::string& out_path, int record_every, double theta0, double newton_tol,
            bool reconcile_qr, const std::vector<std::string>& sets,
            const std::vector<std::string>& poses) {
  auto loaded = load_model(file);
  if (!loaded) return kExitInvalid;
  try {
    assemble::AssembleOptions opts;
    opts.theta0 = theta0;
    const auto sys = assemble::assemble(loaded->flat, opts);

    sim::IntegratorConfig cfg;
    cfg.method = (method == "lie-euler") ? sim::Method::LieEuler : sim::Method::LieMidpoint;
    cfg.h = dt;
    cfg.t_end = t_end;
    cfg.record_every = record_every;
    cfg.newton_tol = newton_tol;
    cfg.reconcile_qr = reconcile_qr;

    sim::SystemState st = sim::make_initial_state(sys);
    if (!apply_sets(sys, st, sets, poses)) return kExitInvalid;

    const sim::Trajectory traj = sim::simulate(sys, st, cfg);

    std::ofstream csv(out_path);
    if (!csv) {
      std::cerr << "cannot write " << out_path << "\n";
      return kExitInvalid;
    }
    sim::write_csv(sys, traj, csv);

    // audit summary
    double e0 = traj.audits.empty() ? 0.0 : traj.audits.front().report.e_total;
    double drift = 0.0, destr_neg = 0.0, max_cres = 0.0;
    for (const auto& a : traj.audits) {
      drift = std::max(drift, std::abs(a.report.e_total - e0) / std::max(1.0, std::abs(e0)));
      destr_neg = std::max(destr_neg, -a.report.exergy_destruction_rate);
      max_cres = std::max(max_cres, a.report.velocity_constraint_residual);
    }
    nlohmann::json audit;
    audit["model"] = file;
    audit["method"] = method;
    audit["dt"] = dt;
    audit["t_end"] = t_end;
    audit["theta0"] = sys.theta0();
    audit["samples"] = traj.times.size();
    audit["e_total_initial"] = e0;
    audit["e_total_drift_rel"] = drift;
    audit["max_destruction_negativity"] = std::max(0.0, destr_neg);
    audit["max_constraint_residual"] = max_cres;
    audit["final_position_drift"] =
        traj.audits.empty() ? 0.0 : traj.audits.back().report.position_drift;
    audit["aborted"] = traj.aborted;
    if (traj.aborted) audit["abort_reason"] = traj.abort_reason;

    std::ofstream aj(out_path + ".audit.json");
    aj << audit.dump(2) << "\n";
    std::cout << audit.dump(2) << "\n";

    return traj.aborted ? kExitDiverged : kExitOk;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return (e.code() == "NewtonDiverged") ? kExitDiverged : kExitInvalid;
  }
}

int cmd_flatten(const std::string& file, bool as_json) {
  auto loaded = load_model(file);
  if (!loaded) return kExitInvalid;
  if (as_json) {
    std::cout << core::flat_model_to_json(loaded->flat).dump(2) << "\n";
    return kExitOk;
  }
  lang::ParsedModel out;
  out.patterns.push_back(loaded->flat.pattern);
  out.root = loaded->flat.pattern.name;
  for (const auto& [box, comp] : loaded->flat.components) {
    lang::ParsedModel::Bind b;
    b.path = box;
    b.target = comp->type_name();
    const auto* ci = dynamic_cast<const components::ComponentInstance*>(comp.get());
    if (ci) b.args = ci->args();
    out.binds.push_back(std::move(b));
  }
  std::cout << lang::serialize(out);
  return kExitOk;
}

int cmd_check(const std::string& file, bool dump_equations, double theta0) {
  auto loaded = load_model(file);
  if (!loaded) return kExitInvalid;
  try {
    assemble::AssembleOptions opts;
    opts.theta0 = theta0;
    const auto sys = assemble::assemble(loaded->flat, opts);
    for (const auto& n : sys.notes())
      std::cout << "note [" << n.rule << "] " << n.location << ": " << n.message << "\n";
    std::cout << "ok: " << loaded->flat.pattern.name << " assembles; "
              << sys.layout().state_dim << " state, " << sys.layout().rate_dim << " rate, "
              << sys.layout().z_dim << " algebraic unknowns\n";
    if (dump_equations) std::cout << sys.dump_equations();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EPHS rigid multibody toolkit"};
  app.require_subcommand(1);

  std::string file, method = "lie-midpoint", out_path = "traj.csv";
  double t_end = 1.0, dt = 1e-3, theta0 = default_theta0(), newton_tol = 1e-10;
  int record_every = 1;
  bool as_json = false, dump_eq = false, reconcile_qr = false;
  std::vector<std::string> sets, poses;

  auto* run = app.add_subcommand("run", "simulate a model and write a CSV trajectory");
  run->add_option("model", file, "model file (.ephs or .json)")->required();
  run->add_option("--t-end", t_end, "simulation time [s]");
  run->add_option("--dt", dt, "step size [s]");
  run->add_option("--method", method, "lie-euler | lie-midpoint")
      ->check(CLI::IsMember({"lie-euler", "lie-midpoint"}));
  run->add_option("--out", out_path, "CSV output path");
  run->add_option("--record-every", record_every, "record every n-th step");
  run->add_option("--theta0", theta0, "reference temperature [K]");
  run->add_option("--newton-tol", newton_tol, "Newton tolerance");
  run->add_flag("--reconcile-qr", reconcile_qr, "derive q_r from body poses when inconsistent");
  run->add_option("--set", sets, "initial vector state, junction=v1[,v2,...]");
  run->add_option("--set-pose", poses, "initial pose, junction=rx,ry,rz[,ax,ay,az,angle]");

  auto* flatten = app.add_subcommand("flatten", "print the flattened interconnection pattern");
  flatten->add_option("model", file, "model file")->required();
  flatten->add_flag("--json", as_json, "machine-readable JSON output");

  auto* check = app.add_subcommand("check", "validate, bind, assemble, report diagnostics");
  check->add_option("model", file, "model file")->required();
  check->add_flag("--dump-equations", dump_eq, "print the assembled equation listing");
  check->add_option("--theta0", theta0, "reference temperature [K]");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(run))
    return cmd_run(file, t_end, dt, method, out_path, record_every, theta0, newton_tol,
                   reconcile_qr, sets, poses);
  if (app.got_subcommand(flatten)) return cmd_flatten(file, as_json);
  if (app.got_subcommand(check)) return cmd_check(file, dump_eq, theta0);
  return kExitInvalid;
}
