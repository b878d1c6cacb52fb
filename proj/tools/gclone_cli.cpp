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


// gclone command-line tool. Exit codes: 0 ok, 1 usage, 2 numeric, 3 I/O.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
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
using json = nlohmann::json;
using namespace gclone;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// Manifest entries are resolved against the manifest's own directory.
fs::path resolve(const fs::path& manifest, const std::string& entry) {
  const fs::path p(entry);
  return p.is_absolute() ? p : manifest.parent_path() / p;
}

std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", a);
  return buf;
}

// --- make-data ---------------------------------------------------------------

struct MakeDataArgs {
  fs::path out;
  int count = 256;
  int resolution = 32;
};

void cmd_make_data(const MakeDataArgs& a, std::uint64_t seed) {
  ensure_dir(a.out);
  const auto images = make_synthetic_dataset(a.count, seed, a.resolution);
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%05zu.png", i);
    save_image(images[i], a.out / name);
  }
  std::cout << "wrote " << images.size() << " images to " << a.out.string() << '\n';
}

// --- train-toy ---------------------------------------------------------------

struct TrainArgs {
  fs::path data;
  fs::path out;
  ToyTrainOptions opts;
};

void cmd_train(const TrainArgs& a, std::uint64_t seed) {
  auto images = load_image_dir(a.data);
  if (images.empty()) throw UsageError("no PNG images in " + a.data.string());
  const fs::path dir = a.out.has_parent_path() ? a.out.parent_path() : fs::path(".");
  ensure_dir(dir);
  GeneratorConfig gc;
  DiscriminatorConfig dc;
  if (images.front().height != gc.resolution() || images.front().width != gc.resolution()) {
    throw UsageError("training images must be " + std::to_string(gc.resolution()) + "x" +
                     std::to_string(gc.resolution()));
  }
  write_json({{"command", "train-toy"},
              {"data", a.data.string()},
              {"steps", a.opts.steps},
              {"batch", a.opts.batch},
              {"gamma", a.opts.gamma},
              {"lr", a.opts.lr},
              {"r1_interval", a.opts.r1_interval},
              {"seed", seed}},
             dir / "train_run.json");

  TrainSampler sampler(std::move(images), Rng(seed).fork("train.data"));
  RunConfig rc;
  rc.seed = seed;
  rc.output_dir = dir;
  std::ofstream curve(dir / "train_log.csv");
  if (!curve) throw IoError("cannot write " + (dir / "train_log.csv").string());
  curve.precision(9);
  curve << "step,g_loss,d_loss,r1\n";
  TrainedGan gan = train_toy_gan(sampler, a.opts, rc, gc, dc, [&](const TrainLogRow& r) {
    curve << r.step << ',' << r.g_loss << ',' << r.d_loss << ',' << r.r1 << '\n';
    if (r.step % 500 == 0 || r.step == a.opts.steps) {
      std::cout << "step " << r.step << " g " << r.g_loss << " d " << r.d_loss << std::endl;
    }
  });
  CheckpointMeta meta;
  meta.generator = gc;
  meta.discriminator = dc;
  meta.gamma = a.opts.gamma;
  meta.seed = seed;
  meta.train_steps = a.opts.steps;
  save_checkpoint(a.out, gan.generator, gan.discriminator, meta);
  std::cout << "checkpoint " << a.out.string() << " G " << hash_hex(snapshot(gan.generator).hash) << '\n';
}

// --- project -----------------------------------------------------------------

struct ProjectArgs {
  fs::path ckpt, image, out;
  int steps = 500;
  std::string space = "WPLUS";
  double lr = 0.05;
};

void cmd_project(const ProjectArgs& a, std::uint64_t seed) {
  Checkpoint ck = load_checkpoint(a.ckpt);
  const Image x = load_image(a.image);
  ensure_dir(a.out);
  ProjectOptions po;
  po.steps = a.steps;
  po.space = parse_latent_space(a.space);
  po.lr = a.lr;
  po.seed = seed;
  write_json({{"command", "project"},
              {"ckpt", a.ckpt.string()},
              {"image", a.image.string()},
              {"steps", po.steps},
              {"space", to_string(po.space)},
              {"lr", po.lr},
              {"seed", seed}},
             a.out / "run.json");
  const ProjectResult r = project(x, ck.generator, po);
  save_code(r.code, a.out / "code.json");
  save_image(r.image, a.out / "x_hat.png");
  write_project_trace(a.out / "trace.csv", r.trace);
  std::cout << "loss " << r.loss << " mse " << mse(r.image, x) << '\n';
}

// --- clone -------------------------------------------------------------------

struct CloneArgs {
  fs::path ckpt, image, config, data, out;
  int project_steps = 500;
  std::string space = "WPLUS";
  int log_every = 1000;
  // Flag overrides of config keys; only set flags are applied.
  std::map<std::string, std::string> overrides;
};

void cmd_clone(const CloneArgs& a, std::optional<std::uint64_t> seed) {
  Checkpoint ck = load_checkpoint(a.ckpt);
  const Image x = load_image(a.image);
  auto images = load_image_dir(a.data);
  if (images.empty()) throw UsageError("no PNG images in " + a.data.string());
  ensure_dir(a.out);

  KeyValueConfig kv = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
  KeyValueConfig flags;
  for (const auto& [k, v] : a.overrides) flags.set(k, v);
  if (seed) flags.set("seed", std::to_string(*seed));
  kv.merge(flags);
  const CloneConfig cfg = CloneConfig::from_kv(kv, x.height, x.width);
  cfg.to_kv().save(a.out / "effective.cfg");
  write_json({{"command", "clone"},
              {"ckpt", a.ckpt.string()},
              {"image", a.image.string()},
              {"data", a.data.string()},
              {"project_steps", a.project_steps},
              {"space", a.space},
              {"config", cfg.to_kv().values()}},
             a.out / "run.json");

  ProjectOptions po;
  po.steps = a.project_steps;
  po.space = parse_latent_space(a.space);
  po.seed = cfg.seed;
  ProjectResult proj;
  const Projection h = [&](const Image& img) {
    proj = project(img, ck.generator, po, cfg.mask ? &*cfg.mask : nullptr);
    return proj.code;
  };
  TrainSampler sampler(std::move(images), Rng(cfg.seed).fork("clone.data"));
  const CloneResult r = clone(x, ck.generator, ck.discriminator, sampler, h, cfg, [&](const LossReport& rep) {
    if (a.log_every > 0 && rep.iteration % a.log_every == 0) {
      std::cout << "iter " << rep.iteration << " recon " << rep.recon << " g " << rep.global_g << " d "
                << rep.global_d << std::endl;
    }
  });

  save_image(proj.image, a.out / "x_hat.png");
  save_image(r.x_star, a.out / "x_star.png");
  const DiffMap diff = pixel_diff_map(x, r.x_star);
  save_image(diff.map, a.out / "diff.png");
  {
    std::ofstream trace(a.out / "trace.csv");
    if (!trace) throw IoError("cannot write trace.csv");
    write_loss_trace(trace, r.trace);
  }
  save_code(r.code, a.out / "code.json");
  CheckpointMeta meta = ck.meta;
  meta.seed = cfg.seed;
  save_checkpoint(a.out / "gplus.ckpt", ck.generator, ck.discriminator, meta);

  json result = {{"converged", r.converged},
                 {"stopped_at", r.stopped_at},
                 {"final_recon", r.final_recon},
                 {"mse_projection", mse(proj.image, x)},
                 {"mse_clone", mse(r.x_star, x)},
                 {"diff_scale", diff.scale},
                 {"g_pre_hash", hash_hex(r.g_pre.hash)},
                 {"d_pre_hash", hash_hex(r.d_pre.hash)},
                 {"g_post_hash", hash_hex(r.g_post_hash)},
                 {"d_post_hash", hash_hex(r.d_post_hash)}};
  if (!r.trace.empty()) {
    const LossReport& last = r.trace.back();
    result["final_losses"] = {{"recon", last.recon}, {"global_g", last.global_g}, {"global_d", last.global_d}};
  }
  write_json(result, a.out / "result.json");
  std::cout << "converged " << (r.converged ? "yes" : "no") << " stopped_at " << r.stopped_at << " mse "
            << mse(r.x_star, x) << " (projection " << mse(proj.image, x) << ")\n";
}

// --- edit / direction --------------------------------------------------------

struct EditArgs {
  fs::path ckpt, code, direction, out;
  std::vector<double> alphas = {0.0};
};

void cmd_edit(const EditArgs& a) {
  const Checkpoint ck = load_checkpoint(a.ckpt);
  const LatentCode code = load_code(a.code);
  const EditDirection d = load_direction(a.direction);
  ensure_dir(a.out);
  json rows = json::array();
  for (double alpha : a.alphas) {
    const Image img = ck.generator.generate(apply_direction(code, d, alpha));
    const std::string name = "edit_" + alpha_tag(alpha) + ".png";
    save_image(img, a.out / name);
    rows.push_back({{"alpha", alpha}, {"file", name}, {"brightness", mean_brightness(img)}});
  }
  write_json({{"command", "edit"},
              {"ckpt", a.ckpt.string()},
              {"code", a.code.string()},
              {"direction", a.direction.string()},
              {"outputs", rows}},
             a.out / "run.json");
  std::cout << "wrote " << a.alphas.size() << " edits to " << a.out.string() << '\n';
}

struct DirectionArgs {
  fs::path ckpt, out;
  int samples = 1000;
};

void cmd_direction(const DirectionArgs& a, std::uint64_t seed) {
  const Checkpoint ck = load_checkpoint(a.ckpt);
  const EditDirection d = discover_direction(ck.generator, mean_brightness, a.samples, seed);
  if (a.out.has_parent_path()) ensure_dir(a.out.parent_path());
  save_direction(d, a.out);
  std::cout << "brightness direction written to " << a.out.string() << '\n';
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  fs::path pairs, ckpt, fid_real, out;
  int fid_samples = 256;
};

void cmd_eval(const EvalArgs& a, std::uint64_t seed) {
  const json manifest = read_json(a.pairs);
  if (!manifest.is_array()) throw UsageError("pairs manifest must be a JSON list");
  std::optional<Checkpoint> ck;
  if (!a.ckpt.empty()) ck = load_checkpoint(a.ckpt);
  const FeatureExtractor fx = ck ? discriminator_extractor(ck->discriminator) : identity_extractor();
  ensure_dir(a.out);

  std::vector<MetricRow> rows;
  try {
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      const json& e = manifest[i];
      std::string name, pa, pb;
      if (e.is_array() && e.size() == 2) {
        pa = e[0].get<std::string>();
        pb = e[1].get<std::string>();
        name = fs::path(pa).stem().string();
      } else if (e.is_object()) {
        pa = e.at("a").get<std::string>();
        pb = e.at("b").get<std::string>();
        name = e.value("name", fs::path(pa).stem().string());
      } else {
        throw UsageError("pairs manifest entry " + std::to_string(i) + " must be [a, b] or {a, b}");
      }
      const Image x1 = load_image(resolve(a.pairs, pa));
      const Image x2 = load_image(resolve(a.pairs, pb));
      rows.push_back({name, mse(x1, x2), perceptual_distance(x1, x2, fx)});
    }
  } catch (const json::exception& e) {
    throw UsageError("bad pairs manifest: " + std::string(e.what()));
  }
  write_metrics_csv(a.out / "metrics.csv", rows);
  write_metrics_json(a.out / "metrics.json", rows);
  for (const auto& r : rows) std::cout << r.name << " mse " << r.mse << " perceptual " << r.perceptual << '\n';

  if (!a.fid_real.empty()) {
    if (!ck) throw UsageError("--fid-real needs --ckpt");
    const auto real = load_image_dir(a.fid_real);
    const FrechetResult f = fid_proxy(ck->generator, real, a.fid_samples, fx, seed);
    write_json({{"fid_proxy", f.distance}, {"ridge", f.regularization}, {"fake_samples", a.fid_samples}},
               a.out / "fid.json");
    std::cout << "fid_proxy " << f.distance << '\n';
  }
}

// --- align / compose ---------------------------------------------------------

struct AlignArgs {
  fs::path image, landmarks, tmpl, out;
  int size = 32;
  bool blur = false;
};

void cmd_align(const AlignArgs& a) {
  const Image img = load_image(a.image);
  const auto faces = load_landmarks(a.landmarks);
  const auto canonical = load_template(a.tmpl);
  ensure_dir(a.out);
  json listed = json::array();
  for (const auto& f : faces) {
    Aligned al = align(img, f.points, canonical, a.size);
    if (a.blur) al.image = boundary_blur(al.image);
    const std::string crop = "aligned_" + f.face_id + ".png";
    const std::string tf = "transform_" + f.face_id + ".json";
    save_image(al.image, a.out / crop);
    save_transform(al.transform, a.out / tf);
    listed.push_back({{"image", crop}, {"transform", tf}});
  }
  // Ready to feed back into `compose`.
  write_json(listed, a.out / "faces.json");
  std::cout << "aligned " << faces.size() << " faces\n";
}

struct ComposeArgs {
  fs::path original, faces, out;
  int feather = 2;
};

void cmd_compose(const ComposeArgs& a) {
  Image canvas = load_image(a.original);
  const json manifest = read_json(a.faces);
  if (!manifest.is_array()) throw UsageError("faces manifest must be a JSON list");
  try {
    for (const json& e : manifest) {
      const Image crop = load_image(resolve(a.faces, e.at("image").get<std::string>()));
      const AlignTransform t = load_transform(resolve(a.faces, e.at("transform").get<std::string>()));
      canvas = paste_back(canvas, crop, t, a.feather);
    }
  } catch (const json::exception& e) {
    throw UsageError("bad faces manifest: " + std::string(e.what()));
  }
  if (a.out.has_parent_path()) ensure_dir(a.out.parent_path());
  save_image(canvas, a.out);
  std::cout << "composed " << manifest.size() << " faces into " << a.out.string() << '\n';
}

// --- advise ------------------------------------------------------------------

struct AdviseArgs {
  fs::path state, out;
  double gamma = 10.0;
  std::string fid, recon, feedback;
};

void cmd_advise(const AdviseArgs& a) {
  TunerState s = (!a.state.empty() && fs::exists(a.state)) ? load_tuner_state(a.state) : init_state(a.gamma);
  if (!a.fid.empty()) s.fid = parse_level(a.fid);
  if (!a.recon.empty()) s.recon = parse_level(a.recon);
  if (!a.feedback.empty()) s.feedback = parse_feedback(a.feedback);
  const Advice adv = advise(s);
  const fs::path out = a.out.empty() ? a.state : a.out;
  if (!out.empty()) save_tuner_state(adv.state, out);
  std::cout << to_string(adv.action) << ": " << adv.description << "\n"
            << "p " << adv.state.p << " lambda " << adv.state.lambda << " gamma " << adv.state.gamma << '\n';
}

// --- selftest ----------------------------------------------------------------

bool cmd_selftest(std::uint64_t seed) {
  bool ok = true;
  for (const CheckOutcome& c : run_selftest(seed)) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (tol " << c.tolerance << ") "
              << c.detail << '\n';
    ok = ok && c.pass;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"gclone: local generator tuning for GAN inversion"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random stream");

  MakeDataArgs md;
  auto* c_md = app.add_subcommand("make-data", "Write the synthetic training set as PNGs");
  c_md->add_option("--out", md.out, "Output directory")->required();
  c_md->add_option("--count", md.count)->check(CLI::PositiveNumber);
  c_md->add_option("--resolution", md.resolution)->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train-toy", "Train the toy GAN");
  c_tr->add_option("--data", tr.data, "Directory of training PNGs")->required();
  c_tr->add_option("--out", tr.out, "Checkpoint path")->required();
  c_tr->add_option("--steps", tr.opts.steps)->check(CLI::PositiveNumber);
  c_tr->add_option("--gamma", tr.opts.gamma)->check(CLI::NonNegativeNumber);
  c_tr->add_option("--batch", tr.opts.batch)->check(CLI::PositiveNumber);
  c_tr->add_option("--lr", tr.opts.lr)->check(CLI::PositiveNumber);
  c_tr->add_option("--r1-interval", tr.opts.r1_interval)->check(CLI::NonNegativeNumber);

  ProjectArgs pr;
  auto* c_pr = app.add_subcommand("project", "Optimize a latent code against a frozen generator");
  c_pr->add_option("--ckpt", pr.ckpt)->required();
  c_pr->add_option("--image", pr.image)->required();
  c_pr->add_option("--out", pr.out, "Output directory")->required();
  c_pr->add_option("--steps", pr.steps)->check(CLI::PositiveNumber);
  c_pr->add_option("--space", pr.space, "W or WPLUS");
  c_pr->add_option("--lr", pr.lr)->check(CLI::PositiveNumber);

  CloneArgs cl;
  auto* c_cl = app.add_subcommand("clone", "Tune the generator until it reproduces the image");
  c_cl->add_option("--ckpt", cl.ckpt)->required();
  c_cl->add_option("--image", cl.image)->required();
  c_cl->add_option("--data", cl.data, "Directory of real PNGs for the global loss")->required();
  c_cl->add_option("--out", cl.out, "Output directory")->required();
  c_cl->add_option("--config", cl.config, "key = value file; flags override it");
  c_cl->add_option("--project-steps", cl.project_steps)->check(CLI::PositiveNumber);
  c_cl->add_option("--space", cl.space, "Projection space, W or WPLUS");
  c_cl->add_option("--log-every", cl.log_every);
  std::map<std::string, std::string> flag_values;
  for (const char* key : {"p", "lambda", "gamma", "epsilon", "max_iters", "lr_g", "lr_d", "batch_size", "levels", "crop"}) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin() + 2, flag.end(), '_', '-');
    c_cl->add_option(flag, flag_values[key], std::string("Overrides config key ") + key);
  }

  EditArgs ed;
  auto* c_ed = app.add_subcommand("edit", "Apply a latent direction and render");
  c_ed->add_option("--ckpt", ed.ckpt, "G or G+ checkpoint")->required();
  c_ed->add_option("--code", ed.code)->required();
  c_ed->add_option("--direction", ed.direction)->required();
  c_ed->add_option("--alpha", ed.alphas, "Edit strengths")->delimiter(',');
  c_ed->add_option("--out", ed.out, "Output directory")->required();

  DirectionArgs di;
  auto* c_di = app.add_subcommand("direction", "Fit the brightness direction in W");
  c_di->add_option("--ckpt", di.ckpt)->required();
  c_di->add_option("--out", di.out, "Direction JSON")->required();
  c_di->add_option("--samples", di.samples)->check(CLI::Range(100, 1000000));

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "MSE and perceptual distance over image pairs");
  c_ev->add_option("--pairs", ev.pairs, "JSON list of [a, b] paths")->required();
  c_ev->add_option("--out", ev.out, "Output directory")->required();
  c_ev->add_option("--ckpt", ev.ckpt, "Use its discriminator as the feature network");
  c_ev->add_option("--fid-real", ev.fid_real, "Real image directory for the FID proxy");
  c_ev->add_option("--fid-samples", ev.fid_samples)->check(CLI::Range(2, 1000000));

  AlignArgs al;
  auto* c_al = app.add_subcommand("align", "Warp faces to the canonical template");
  c_al->add_option("--image", al.image)->required();
  c_al->add_option("--landmarks", al.landmarks)->required();
  c_al->add_option("--template", al.tmpl)->required();
  c_al->add_option("--out", al.out, "Output directory")->required();
  c_al->add_option("--size", al.size)->check(CLI::PositiveNumber);
  c_al->add_flag("--blur", al.blur, "Soften the crop border");

  ComposeArgs co;
  auto* c_co = app.add_subcommand("compose", "Paste edited crops back into the original");
  c_co->add_option("--original", co.original)->required();
  c_co->add_option("--faces", co.faces, "JSON list of {image, transform}")->required();
  c_co->add_option("--out", co.out, "Output PNG")->required();
  c_co->add_option("--feather", co.feather)->check(CLI::NonNegativeNumber);

  AdviseArgs ad;
  auto* c_ad = app.add_subcommand("advise", "One step of the hyperparameter tuner");
  c_ad->add_option("--state", ad.state, "Tuner state JSON (created when missing)");
  c_ad->add_option("--out", ad.out, "Where to write the new state (default --state)");
  c_ad->add_option("--gamma", ad.gamma, "Pretrained R1 gamma for a fresh state");
  c_ad->add_option("--fid", ad.fid, "LOW or HIGH");
  c_ad->add_option("--recon", ad.recon, "LOW or HIGH");
  c_ad->add_option("--feedback", ad.feedback, "NONE, FID_WORSENED, RECON_WORSENED or IMPROVED");

  auto* c_st = app.add_subcommand("selftest", "Pyramid, gradient and gate checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_md) cmd_make_data(md, seed);
    if (*c_tr) cmd_train(tr, seed);
    if (*c_pr) cmd_project(pr, seed);
    if (*c_cl) {
      for (const auto& [k, v] : flag_values) {
        if (!v.empty()) cl.overrides[k] = v;
      }
      cmd_clone(cl, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
    if (*c_ed) cmd_edit(ed);
    if (*c_di) cmd_direction(di, seed);
    if (*c_ev) cmd_eval(ev, seed);
    if (*c_al) cmd_align(al);
    if (*c_co) cmd_compose(co);
    if (*c_ad) cmd_advise(ad);
    if (*c_st && !cmd_selftest(seed)) return kExitNumeric;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
