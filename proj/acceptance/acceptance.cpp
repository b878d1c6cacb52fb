// Copyright 2026 The gclone Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Acceptance run: one PASS/FAIL line per criterion. --quick shrinks the
// training and clone budgets for a fast smoke pass; the verdicts printed in
// that mode are not meaningful for the budget-bound criteria.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "gclone/clone_engine.hpp"
#include "gclone/editing.hpp"
#include "gclone/evalkit.hpp"
#include "gclone/image_io.hpp"
#include "gclone/preprocess.hpp"
#include "gclone/projector.hpp"
#include "gclone/selfcheck.hpp"
#include "gclone/tuner.hpp"

namespace fs = std::filesystem;
using namespace gclone;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Budget {
  int train_steps = 5000;
  int dataset = 2000;
  int queries = 8;
  std::int64_t clone_iters = 20000;
  std::int64_t short_iters = 2000;  // drift sweep and determinism runs
  int gate_iters = 2000;
};

class Report {
 public:
  void line(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
    failures_ += pass ? 0 : 1;
  }
  static void info(const std::string& text) { std::cout << "INFO " << text << std::endl; }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::vector<LatentCode> held_out_codes(const Generator& g, int n, std::uint64_t seed) {
  Rng rng = Rng(seed).fork("acceptance.codes");
  std::vector<LatentCode> codes;
  for (int i = 0; i < n; ++i) {
    std::vector<float> z(g.latent_dim());
    rng.fill_normal(z);
    const nn::Mat w = g.map(Eigen::Map<const nn::Mat>(z.data(), g.latent_dim(), 1));
    codes.push_back(LatentCode::w(std::vector<float>(w.data(), w.data() + g.latent_dim())));
  }
  return codes;
}

CloneConfig clone_config(std::int64_t iters, double p, std::uint64_t seed) {
  CloneConfig cfg;
  cfg.p = p;
  cfg.lambda = 10.0;
  cfg.gamma = 10.0;
  cfg.epsilon = 1e-3;
  cfg.max_iters = iters;
  cfg.seed = seed;
  return cfg;
}

struct CloneRun {
  CloneResult result;
  Generator g_plus;
  ProjectResult projection;
};

CloneRun run_clone(const Checkpoint& base, const Image& x, const std::vector<Image>& data, const CloneConfig& cfg) {
  CloneRun run{{}, base.generator, {}};
  Discriminator d = base.discriminator;
  ProjectOptions po;
  po.seed = cfg.seed;
  const Projection h = [&](const Image& img) {
    run.projection = project(img, base.generator, po);
    return run.projection.code;
  };
  TrainSampler sampler(data, Rng(cfg.seed).fork("clone.data"));
  run.result = clone(x, run.g_plus, d, sampler, h, cfg);
  return run;
}

std::string trace_csv(const CloneResult& r) {
  std::ostringstream s;
  write_loss_trace(s, r.trace);
  return s.str();
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --- criteria that need no trained model --------------------------------------

void pyramid_identity(Report& rep, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const CheckOutcome c = check_pyramid_identity(50, seed);
  const double t = seconds_since(t0);
  rep.line(1, "pyramid identity", c.pass && t < 5.0,
           "max err " + fmt(c.value) + " (< 1e-5), " + fmt(t) + " s (< 5 s)");
}

void loss_gradient(Report& rep, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const CheckOutcome c = check_lap_loss_gradient(64, seed);
  const double t = seconds_since(t0);
  rep.line(2, "lap_loss gradient", c.pass && t < 30.0,
           "max rel err " + fmt(c.value) + " (< 1e-3) over 64 coords, " + fmt(t) + " s (< 30 s)");
}

void tuner_rules(Report& rep) {
  auto levels = [](Level fid, Level recon) {
    TunerState s = init_state(10.0);
    s.fid = fid;
    s.recon = recon;
    return s;
  };
  int ok = 0, total = 0;
  auto expect = [&](bool cond) {
    ++total;
    ok += cond ? 1 : 0;
  };
  const TunerState init = init_state(7.0);
  expect(init.p == 0.125 && init.lambda == 10.0 && init.gamma == 7.0);

  const Advice both_high = advise(levels(Level::High, Level::High));
  expect(both_high.action == TunerAction::ChangeGamma && both_high.state.gamma == 15.0 && both_high.state.p == 0.125 &&
         both_high.state.lambda == 10.0);
  const Advice recon_high = advise(levels(Level::Low, Level::High));
  expect(recon_high.action == TunerAction::IncreaseLambda && recon_high.state.lambda == 20.0 &&
         recon_high.state.p == 0.125);
  const Advice fid_high = advise(levels(Level::High, Level::Low));
  expect(fid_high.action == TunerAction::DecreaseP && fid_high.state.p == 0.0625 && fid_high.state.lambda == 10.0);
  const Advice both_low = advise(levels(Level::Low, Level::Low));
  expect(both_low.action == TunerAction::None && both_low.state.p == 0.125 && both_low.state.lambda == 10.0 &&
         both_low.state.gamma == 10.0);

  TunerState after_lambda = recon_high.state;
  after_lambda.feedback = Feedback::FidWorsened;
  const Advice fb1 = advise(after_lambda);
  expect(fb1.action == TunerAction::DecreaseP && fb1.state.p == 0.0625 && fb1.state.lambda == 20.0);
  TunerState after_p = fid_high.state;
  after_p.feedback = Feedback::ReconWorsened;
  const Advice fb2 = advise(after_p);
  expect(fb2.action == TunerAction::IncreaseLambda && fb2.state.lambda == 20.0 && fb2.state.p == 0.0625);

  rep.line(8, "tuner rule table", ok == total,
           std::to_string(ok) + "/" + std::to_string(total) + " (init + 4 cases + 2 feedback rules)");
}

void masked_recon(Report& rep, std::uint64_t seed) {
  const CheckOutcome c = check_masked_recon(seed);
  rep.line(9, "masked recon", c.pass, "loss change " + fmt(c.value) + " (< 1e-6), " + c.detail);
}

void alignment(Report& rep) {
  const std::vector<Point2> src = {{20, 24}, {44, 24}, {32, 36}, {23, 46}, {41, 46}};
  auto mapped = [&](const Eigen::Matrix2d& a, const Point2& t) {
    std::vector<Point2> out;
    for (const auto& p : src) out.push_back(a * p + t);
    return out;
  };
  Eigen::Matrix2d rot;
  rot << 0, -1, 1, 0;
  AlignTransform scale2, turn;
  scale2.m = estimate_similarity(src, mapped(2.0 * Eigen::Matrix2d::Identity(), {3, -5}));
  turn.m = estimate_similarity(src, mapped(rot, {64, 0}));
  Eigen::Matrix<double, 2, 3> want_scale, want_turn;
  want_scale << 2, 0, 3, 0, 2, -5;
  want_turn << 0, -1, 64, 1, 0, 0;
  const double err = std::max((scale2.m - want_scale).cwiseAbs().maxCoeff(), (turn.m - want_turn).cwiseAbs().maxCoeff());
  const bool recovered = err < 1e-4 && std::abs(scale2.scale() - 2.0) < 1e-4 &&
                         std::abs(turn.rotation() - std::numbers::pi / 2) < 1e-4;

  Image original(72, 80, 3);
  Rng rng(11);
  for (float& v : original.pixels) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  const Aligned al = align(original, src, mapped(0.8 * rot, {60, 4}), 32);
  Image edited = al.image;
  for (float& v : edited.pixels) v = -v;
  long outside = 0, changed = 0;
  for (int feather : {0, 3}) {
    const Image back = paste_back(original, edited, al.transform, feather);
    for (int y = 0; y < original.height; ++y) {
      for (int x = 0; x < original.width; ++x) {
        const Point2 q = al.transform.apply({double(x), double(y)});
        if (q.x() >= 0 && q.y() >= 0 && q.x() <= 31 && q.y() <= 31) continue;
        ++outside;
        for (int c = 0; c < 3; ++c) changed += back.at(c, y, x) != original.at(c, y, x) ? 1 : 0;
      }
    }
  }
  rep.line(11, "alignment round trip", recovered && changed == 0 && outside > 0,
           "max coeff err " + fmt(err) + " (< 1e-4), " + std::to_string(changed) + " changed of " +
               std::to_string(outside) + " outside pixels");
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"gclone acceptance run"};
  bool quick = false;
  std::uint64_t seed = 1;
  fs::path out_dir = fs::temp_directory_path() / "gclone_acceptance";
  app.add_flag("--quick", quick, "Small budgets for a smoke pass");
  app.add_option("--seed", seed);
  app.add_option("--out", out_dir, "Where images and the checkpoint go");
  CLI11_PARSE(app, argc, argv);

  Budget budget;
  if (quick) {
    budget = {200, 256, 2, 200, 100, 2000};
    Report::info("quick mode: reduced budgets");
  }
  fs::create_directories(out_dir);
  Report rep;
  const auto t_all = Clock::now();

  pyramid_identity(rep, seed);
  loss_gradient(rep, seed);

  // Toy GAN on the synthetic set; the queries come from a disjoint seed.
  const auto data = make_synthetic_dataset(budget.dataset, seed);
  const auto queries = make_synthetic_dataset(budget.queries, seed + 1000);
  Checkpoint base;
  {
    const auto t0 = Clock::now();
    TrainSampler sampler(data, Rng(seed).fork("train.data"));
    ToyTrainOptions opts;
    opts.steps = budget.train_steps;
    opts.log_every = 100;
    RunConfig rc;
    rc.seed = seed;
    TrainedGan gan = train_toy_gan(sampler, opts, rc);
    base.generator = std::move(gan.generator);
    base.discriminator = std::move(gan.discriminator);
    base.meta.train_steps = opts.steps;
    base.meta.seed = seed;
    double g_tail = 0.0, d_tail = 0.0;
    int n_tail = 0;
    for (std::size_t i = gan.log.size() > 10 ? gan.log.size() - 10 : 0; i < gan.log.size(); ++i, ++n_tail) {
      g_tail += gan.log[i].g_loss;
      d_tail += gan.log[i].d_loss;
    }
    Report::info("trained " + std::to_string(opts.steps) + " steps in " + fmt(seconds_since(t0)) +
                 " s; last-10-log mean g " + fmt(g_tail / n_tail) + " d " + fmt(d_tail / n_tail));
    save_checkpoint(out_dir / "toy.ckpt", base.generator, base.discriminator, base.meta);
  }

  // 3: clone against projection-only on held-out queries.
  std::optional<CloneRun> first_run;
  {
    const auto t0 = Clock::now();
    std::vector<double> ratios;
    for (int q = 0; q < budget.queries; ++q) {
      CloneRun run = run_clone(base, queries[q], data, clone_config(budget.clone_iters, 0.125, seed + q));
      const double m_proj = mse(run.projection.image, queries[q]);
      const double m_clone = mse(run.result.x_star, queries[q]);
      ratios.push_back(m_clone / m_proj);
      Report::info("query " + std::to_string(q) + ": projection mse " + fmt(m_proj) + ", clone mse " + fmt(m_clone) +
                   ", ratio " + fmt(ratios.back()) + ", stopped_at " + std::to_string(run.result.stopped_at));
      const std::string tag = "q" + std::to_string(q);
      save_image(queries[q], out_dir / (tag + "_x.png"));
      save_image(run.projection.image, out_dir / (tag + "_x_hat.png"));
      save_image(run.result.x_star, out_dir / (tag + "_x_star.png"));
      if (q == 0) first_run = std::move(run);
    }
    const double med = median(ratios);
    const double t = seconds_since(t0);
    rep.line(3, "clone vs projection gap", med <= 0.1 && t <= 3600.0,
             "median mse ratio " + fmt(med) + " (<= 0.1) over " + std::to_string(budget.queries) + " queries, " +
                 fmt(t) + " s (<= 3600 s)");
  }

  // 4: an on-manifold query with the exact code.
  {
    const LatentCode w0 = held_out_codes(base.generator, 1, seed + 7).front();
    const Image x = base.generator.generate(w0);
    Generator g = base.generator;
    Discriminator d = base.discriminator;
    TrainSampler sampler(data, Rng(seed).fork("clone.data"));
    const CloneResult r =
        clone(x, g, d, sampler, [&](const Image&) { return w0; }, clone_config(budget.clone_iters, 0.125, seed));
    rep.line(4, "on-manifold convergence", r.converged && r.stopped_at <= 5,
             std::string("converged ") + (r.converged ? "true" : "false") + ", stopped_at " +
                 std::to_string(r.stopped_at) + " (<= 5)");
  }

  // 5: gate frequency measured from a real clone trace.
  {
    CloneConfig cfg = clone_config(budget.gate_iters, 0.125, seed);
    cfg.epsilon = 1e-12;
    Generator g = base.generator;
    Discriminator d = base.discriminator;
    const LatentCode code = first_run->projection.code;
    TrainSampler sampler(data, Rng(seed).fork("clone.data"));
    const CloneResult r = clone(queries[0], g, d, sampler, [&](const Image&) { return code; }, cfg);
    const auto gated = std::count_if(r.trace.begin(), r.trace.end(), [](const LossReport& l) { return l.gated; });
    const double n = static_cast<double>(r.trace.size());
    const double freq = gated / n;
    const double band = 3.0 * std::sqrt(cfg.p * (1.0 - cfg.p) / n);
    rep.line(5, "gate frequency", r.trace.size() == static_cast<std::size_t>(budget.gate_iters) &&
                                      std::abs(freq - cfg.p) <= band,
             std::to_string(gated) + "/" + std::to_string(r.trace.size()) + " = " + fmt(freq) + ", |f - p| " +
                 fmt(std::abs(freq - cfg.p)) + " (<= " + fmt(band) + ")");
  }

  // 6: drift grows with p.
  const auto codes = held_out_codes(base.generator, 64, seed + 3);
  {
    std::vector<double> drifts;
    std::string detail;
    for (double p : {1.0 / 32, 1.0 / 8, 1.0 / 2, 1.0}) {
      const CloneRun run = run_clone(base, queries[0], data, clone_config(budget.short_iters, p, seed));
      drifts.push_back(drift(base.generator, run.g_plus, codes));
      detail += (detail.empty() ? "" : ", ") + ("p=" + fmt(p) + ": " + fmt(drifts.back()));
    }
    bool ordered = true;
    for (std::size_t i = 0; i + 1 < drifts.size(); ++i) ordered = ordered && drifts[i] <= drifts[i + 1] * 1.1;
    rep.line(6, "drift ordering in p", ordered,
             detail + " (T=" + std::to_string(budget.short_iters) + ", 64 codes, slack 1.1)");
  }

  // 7: the brightness edit carries over to G+.
  {
    const EditDirection dir = discover_direction(base.generator, mean_brightness, 1000, seed);
    const std::vector<LatentCode> sixteen(codes.begin(), codes.begin() + 16);
    std::vector<LatentCode> edited;
    for (const auto& c : sixteen) edited.push_back(apply_direction(c, dir, 2.0));
    const Generator& g_plus = first_run->g_plus;
    const double plain = drift(base.generator, g_plus, sixteen);
    const double moved = drift(base.generator, g_plus, edited);
    double shift = 0.0;
    for (std::size_t i = 0; i < sixteen.size(); ++i) {
      shift += mean_brightness(base.generator.generate(edited[i])) - mean_brightness(base.generator.generate(sixteen[i]));
    }
    rep.line(7, "editability transfer", moved <= 2.0 * plain,
             "edited delta " + fmt(moved) + " (<= 2 x " + fmt(plain) + "), alpha 2, mean brightness shift " +
                 fmt(shift / 16.0));
  }

  tuner_rules(rep);
  masked_recon(rep, seed);

  // 10: two identical clone runs, compared through their files.
  {
    std::vector<std::string> traces, pngs;
    for (int run = 0; run < 2; ++run) {
      const CloneRun r = run_clone(base, queries[1 % budget.queries], data, clone_config(budget.short_iters, 0.125, seed));
      traces.push_back(trace_csv(r.result));
      const fs::path png = out_dir / ("determinism_" + std::to_string(run) + ".png");
      save_image(r.result.x_star, png);
      pngs.push_back(file_bytes(png));
    }
    const bool same = traces[0] == traces[1] && pngs[0] == pngs[1] && !pngs[0].empty();
    rep.line(10, "determinism", same,
             std::string("trace csv ") + (traces[0] == traces[1] ? "identical" : "differs") + ", x* png " +
                 (pngs[0] == pngs[1] ? "identical" : "differs") + " (T=" + std::to_string(budget.short_iters) + ")");
  }

  alignment(rep);

  Report::info("total " + fmt(seconds_since(t_all)) + " s; " + std::to_string(rep.failures()) + " failing");
  return rep.failures() == 0 ? 0 : 1;
}
