// pgap: sharp p-spectral gaps of one-dimensional MCP(K,N) model spaces.
//
// Subcommands: gap, sweep, trig, density, eigenfunction, oracle, audit.
// Exit codes: 0 success, 2 validation failure / bad input data,
// 3 solver failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgap/density.hpp"
#include "pgap/gap.hpp"
#include "pgap/geometry.hpp"
#include "pgap/oracle.hpp"
#include "pgap/pruefer.hpp"
#include "pgap/ptrig.hpp"
#include "pgap/sweep.hpp"

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw std::invalid_argument("empty list: '" + csv + "'");
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
  os << text;
}

struct CommonParams {
  double p = 2.0, K = 0.0, N = 2.0, D = 1.0;
  double tol = 1e-8;
  std::size_t grid = 4096;

  pgap::Params make() const {
    pgap::Tolerances t;
    t.eig_rel = tol;
    return pgap::Params(pgap::PExponent(p), K, N, D, t);
  }
};

void add_common(CLI::App* cmd, CommonParams& c, bool with_p = true) {
  if (with_p) cmd->add_option("--p", c.p, "exponent p > 1");
  cmd->add_option("--K", c.K, "curvature lower bound");
  cmd->add_option("--N", c.N, "dimension upper bound, N > 1");
  cmd->add_option("--D", c.D, "diameter, D > 0");
  cmd->add_option("--tol", c.tol, "relative eigenvalue tolerance");
  cmd->add_option("--grid", c.grid, "density grid cells");
}

int run(int argc, char** argv) {
  CLI::App app{"sharp p-spectral gaps of one-dimensional MCP(K,N) model spaces"};
  app.require_subcommand(1);

  // ---- trig ----------------------------------------------------------
  auto* trig_cmd = app.add_subcommand("trig", "generalized trigonometric functions");
  double trig_p = 2.0, trig_t = 0.0;
  std::string trig_eval = "sin";
  bool trig_selftest = false;
  trig_cmd->add_option("--p", trig_p, "exponent p > 1");
  trig_cmd->add_option("--eval", trig_eval, "sin | cos | pi");
  trig_cmd->add_option("--t", trig_t, "argument");
  trig_cmd->add_flag("--selftest", trig_selftest, "print max identity violation");

  // ---- gap -----------------------------------------------------------
  auto* gap_cmd = app.add_subcommand("gap", "sharp p-spectral gap");
  CommonParams gap_c;
  add_common(gap_cmd, gap_c);
  std::string gap_density, gap_out;
  bool gap_json = false, gap_csv = false;
  gap_cmd->add_option("--density", gap_density, "density CSV (x,log_h,log_deriv)");
  gap_cmd->add_flag("--json", gap_json, "emit JSON (default)");
  gap_cmd->add_flag("--csv", gap_csv, "emit a CSV row");
  gap_cmd->add_option("--out", gap_out, "output file (default stdout)");

  // ---- sweep ---------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep over parameter lists");
  std::string sw_p = "2", sw_K = "0", sw_N = "2", sw_D = "1", sw_out;
  double sw_tol = 1e-8;
  bool sw_oracle = false;
  sweep_cmd->add_option("--p-list", sw_p, "comma-separated p values");
  sweep_cmd->add_option("--K-list", sw_K, "comma-separated K values");
  sweep_cmd->add_option("--N-list", sw_N, "comma-separated N values");
  sweep_cmd->add_option("--D-list", sw_D, "comma-separated D values");
  sweep_cmd->add_option("--out", sw_out, "output CSV file (default stdout)");
  sweep_cmd->add_option("--tol", sw_tol, "relative eigenvalue tolerance");
  sweep_cmd->add_flag("--with-oracle", sw_oracle, "append an oracle_lambda column");

  // ---- density -------------------------------------------------------
  auto* density_cmd = app.add_subcommand("density", "density utilities");
  density_cmd->require_subcommand(1);
  auto* dval = density_cmd->add_subcommand("validate", "check admissibility");
  CommonParams dv_c;
  add_common(dval, dv_c, false);
  std::string dv_file;
  dval->add_option("--file", dv_file, "density CSV")->required();
  auto* drand = density_cmd->add_subcommand("random", "sample an admissible density");
  CommonParams dr_c;
  add_common(drand, dr_c, false);
  std::uint64_t dr_seed = 0;
  int dr_degree = 6;
  std::string dr_out;
  drand->add_option("--seed", dr_seed, "random seed");
  drand->add_option("--degree", dr_degree, "Bernstein degree of the mixture");
  drand->add_option("--out", dr_out, "output CSV file (default stdout)");

  // ---- eigenfunction -------------------------------------------------
  auto* eig_cmd = app.add_subcommand("eigenfunction", "phase and eigenfunction samples");
  CommonParams eig_c;
  add_common(eig_cmd, eig_c);
  std::string eig_density, eig_out;
  double eig_lambda = -1.0;
  std::size_t eig_samples = 2049;
  eig_cmd->add_option("--density", eig_density, "density CSV");
  eig_cmd->add_option("--lambda", eig_lambda, "eigenvalue (default: solve for it)");
  eig_cmd->add_option("--samples", eig_samples, "number of output samples");
  eig_cmd->add_option("--out", eig_out, "output CSV file (default stdout)");

  // ---- oracle --------------------------------------------------------
  auto* oracle_cmd = app.add_subcommand("oracle", "Rayleigh-quotient minimizer");
  CommonParams or_c;
  add_common(oracle_cmd, or_c);
  std::string or_density;
  std::size_t or_M = 8192;
  int or_restarts = 4;
  std::uint64_t or_seed = 0;
  bool or_json = false;
  std::string or_out;
  oracle_cmd->add_option("--density", or_density, "density CSV");
  oracle_cmd->add_option("--M", or_M, "mesh cells");
  oracle_cmd->add_option("--restarts", or_restarts, "number of initializations");
  oracle_cmd->add_option("--seed", or_seed, "seed for random restarts");
  oracle_cmd->add_flag("--json", or_json, "emit JSON (default)");
  oracle_cmd->add_option("--out", or_out, "output file (default stdout)");

  // ---- audit ---------------------------------------------------------
  auto* audit_cmd = app.add_subcommand("audit", "property audit");
  CommonParams au_c;
  au_c.K = -1.0;
  au_c.N = 3.0;
  add_common(audit_cmd, au_c);
  int au_seeds = 50;
  std::uint64_t au_seed = 0;
  std::string au_out;
  audit_cmd->add_option("--seeds", au_seeds, "number of random densities");
  audit_cmd->add_option("--seed", au_seed, "master seed");
  audit_cmd->add_option("--out", au_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (trig_cmd->parsed()) {
    if (trig_selftest) {
      const double viol =
          pgap::trig_identity_violation({1.2, 1.5, 2.0, 3.0, 4.5}, 10000);
      std::cout << "max identity violation: " << pgap::fmt17(viol) << "\n";
      return viol <= 1e-10 ? 0 : 2;
    }
    const pgap::PExponent p(trig_p);
    double v;
    if (trig_eval == "sin") v = pgap::sin_p(trig_t, p);
    else if (trig_eval == "cos") v = pgap::cos_p(trig_t, p);
    else if (trig_eval == "pi") v = pgap::pi_p(p);
    else throw std::invalid_argument("--eval must be sin, cos or pi");
    std::cout << pgap::fmt17(v) << "\n";
    return 0;
  }

  if (gap_cmd->parsed()) {
    pgap::GapResult res;
    double p = gap_c.p, K = gap_c.K, N = gap_c.N, D = gap_c.D;
    if (!gap_density.empty()) {
      pgap::MCPDensity h = pgap::read_density_csv(gap_density, K, N);
      if (std::abs(h.D() - D) > 1e-9 * std::max(1.0, D))
        throw std::invalid_argument("--D does not match the density support");
      pgap::Tolerances t;
      t.eig_rel = gap_c.tol;
      res = pgap::lambda_of_density(h, pgap::PExponent(p), t);
    } else {
      res = pgap::lambda_sharp(gap_c.make());
    }
    if (gap_csv) {
      pgap::SweepTable t;
      t.rows.push_back({p, K, N, D, res.lambda, res.method,
                        res.minimizing_Dprime.value_or(D), res.iterations,
                        std::nullopt});
      std::ostringstream os;
      pgap::write_sweep_csv(os, t);
      emit(os.str(), gap_out);
    } else {
      emit(pgap::to_json(res, p, K, N, D), gap_out);
    }
    return 0;
  }

  if (sweep_cmd->parsed()) {
    pgap::SweepRequest req;
    req.p_list = parse_list(sw_p);
    req.K_list = parse_list(sw_K);
    req.N_list = parse_list(sw_N);
    req.D_list = parse_list(sw_D);
    req.tol.eig_rel = sw_tol;
    req.with_oracle = sw_oracle;
    pgap::SweepTable table = pgap::run_sweep(req);
    std::ostringstream os;
    pgap::write_sweep_csv(os, table);
    emit(os.str(), sw_out);
    return 0;
  }

  if (density_cmd->parsed()) {
    if (dval->parsed()) {
      pgap::MCPDensity h = pgap::read_density_csv(dv_file, dv_c.K, dv_c.N);
      if (std::abs(h.D() - dv_c.D) > 1e-9 * std::max(1.0, dv_c.D)) {
        std::cout << "{\"schema\":1,\"pass\":false,\"error\":\"support does not match --D\"}\n";
        return 2;
      }
      pgap::ValidationReport rep = pgap::mcp_validate(h, dv_c.make());
      std::cout << "{\"schema\":1,\"pass\":" << (rep.pass ? "true" : "false")
                << ",\"max_ratio_violation\":" << pgap::fmt17(rep.max_ratio_violation)
                << ",\"max_logderiv_violation\":"
                << pgap::fmt17(rep.max_logderiv_violation)
                << ",\"tol\":" << pgap::fmt17(rep.tol) << "}\n";
      return rep.pass ? 0 : 2;
    }
    pgap::MCPDensity h =
        pgap::random_density(dr_c.make(), dr_seed, dr_degree, dr_c.grid);
    std::ostringstream os;
    pgap::write_density_csv(os, h);
    emit(os.str(), dr_out);
    return 0;
  }

  if (eig_cmd->parsed()) {
    const pgap::PExponent p(eig_c.p);
    pgap::PTrigTable trig(p);
    pgap::Tolerances tol;
    tol.eig_rel = eig_c.tol;
    pgap::LogDerivFn T_at;
    const double D = eig_c.D;
    std::vector<double> breaks{0.5 * D};
    double lambda = eig_lambda;
    pgap::PrueferTrajectory traj;
    if (!eig_density.empty()) {
      pgap::MCPDensity h = pgap::read_density_csv(eig_density, eig_c.K, eig_c.N);
      const double guard = tol.endpoint_guard * h.D();
      pgap::MCPDensity hc = h;
      const double hD = h.D();
      T_at = [hc, guard, hD](double x) {
        return hc.T_at(std::clamp(x, guard, hD - guard));
      };
      if (lambda <= 0.0) {
        auto res = pgap::lambda_of_density(h, p, tol);
        lambda = res.lambda;
        traj = res.trajectory;
      } else {
        traj = pgap::integrate_phase_split(T_at, trig, lambda, tol.seed_offset * hD,
                                           -trig.quarter(), +1,
                                           hD * (1.0 - tol.endpoint_guard), breaks);
        traj.a_hit = tol.seed_offset * hD;
      }
    } else {
      pgap::Params pr = eig_c.make();
      pgap::Params prc = pr;
      T_at = [prc](double x) {
        return pgap::model_T(std::clamp(x, 0.0, prc.D), prc);
      };
      if (lambda <= 0.0) {
        auto res = pgap::lambda_hat(pr);
        lambda = res.lambda;
        traj = res.trajectory;
      } else {
        traj = pgap::integrate_phase_split(T_at, trig, lambda, 0.5 * D, 0.0, +1,
                                           D * (1.0 - tol.endpoint_guard), breaks);
        auto left = pgap::integrate_phase_split(T_at, trig, lambda, 0.5 * D, 0.0, -1,
                                                D * tol.endpoint_guard, breaks);
        traj.a_hit = left.a_hit;
      }
    }
    if (!traj.a_hit || !traj.b_hit)
      throw pgap::SolverError("eigenfunction: phase does not reach +-pi_p/2 at this lambda",
                              lambda);
    auto ef = pgap::reconstruct_eigenfunction(traj, T_at, trig, 0.5 * D, breaks,
                                              eig_samples);
    std::ostringstream os;
    os << "x,phi,u,uprime\n";
    for (std::size_t i = 0; i < ef.xs.size(); ++i)
      os << pgap::fmt17(ef.xs[i]) << ',' << pgap::fmt17(ef.phi[i]) << ','
         << pgap::fmt17(ef.u[i]) << ',' << pgap::fmt17(ef.uprime[i]) << "\n";
    emit(os.str(), eig_out);
    return 0;
  }

  if (oracle_cmd->parsed()) {
    const pgap::PExponent p(or_c.p);
    pgap::DiscreteProblem prob =
        or_density.empty()
            ? pgap::DiscreteProblem::from_density(
                  pgap::model_density(or_c.make(), or_c.grid), or_M, p)
            : pgap::DiscreteProblem::from_density(
                  pgap::read_density_csv(or_density, or_c.K, or_c.N), or_M, p);
    pgap::MinimizeResult res = pgap::minimize_gap(prob, or_restarts, or_seed);
    emit(pgap::to_json(res, or_c.p, or_M), or_out);
    return 0;
  }

  if (audit_cmd->parsed()) {
    pgap::AuditReport rep = pgap::run_audit(au_c.make(), au_seeds, au_seed);
    emit(pgap::to_json(rep), au_out);
    return rep.all_pass() ? 0 : 2;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pgap::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
