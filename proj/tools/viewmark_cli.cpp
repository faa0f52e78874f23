// viewmark: watermark a radiance field through its training images and
// verify ownership from a secret camera pose.
//
// Stage order for a fresh run:
//   make-scene -> make-watermark -> train-joint -> train-nerf ->
//   finetune-extractor -> verify / sweep-angles / attack-suite -> report

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "viewmark/pipeline.hpp"
#include "viewmark/scenegen.hpp"

using namespace viewmark;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitReject = 2;
constexpr int kExitTamper = 3;

// Common RunConfig plumbing: --config loads a file, explicit flags win.
struct ConfigArgs {
  std::string config_path;
  std::string scene_root, watermark, out_dir, secret_pose, embed_indices, noise_kind;
  uint64_t seed = 0;
  int downscale = 0, steps = 0, threads = -1;
  double tau = -1;

  CLI::Option *opt_scene, *opt_wm, *opt_out, *opt_secret, *opt_embed, *opt_noise, *opt_seed,
      *opt_downscale, *opt_steps, *opt_threads, *opt_tau;

  void attach(CLI::App* cmd, bool with_steps_alias) {
    cmd->add_option("-c,--config", config_path, "run config file (key=value with sections)");
    opt_scene = cmd->add_option("--scene-root", scene_root, "scene directory");
    opt_wm = cmd->add_option("--watermark", watermark, "watermark image path");
    opt_out = cmd->add_option("--out", out_dir, "run output directory");
    opt_secret = cmd->add_option("--secret-pose", secret_pose,
                                 "secret pose source, '<split>:<index>' or 'matrix:...'");
    opt_embed = cmd->add_option("--embed-indices", embed_indices, "auto | all | i,j,...");
    opt_noise = cmd->add_option("--noise-kind", noise_kind,
                                "none|gaussian|salt_pepper|speckle|poisson");
    opt_seed = cmd->add_option("--seed", seed, "global run seed");
    opt_downscale = cmd->add_option("--downscale", downscale, "integer image downscale");
    opt_steps = with_steps_alias
                    ? cmd->add_option("--steps", steps, "override this stage's step count")
                    : nullptr;
    opt_threads = cmd->add_option("--threads", threads, "worker thread cap (0 = default)");
    opt_tau = cmd->add_option("--tau", tau, "verification acceptance threshold");
  }

  RunConfig resolve(TrainConfig RunConfig::*stage_steps) const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (*opt_scene) cfg.scene_root = scene_root;
    if (*opt_wm) cfg.watermark_path = watermark;
    if (*opt_out) cfg.out_dir = out_dir;
    if (*opt_secret) cfg.secret_pose = secret_pose;
    if (*opt_embed) cfg.embed_indices = embed_indices;
    if (*opt_noise) cfg.noise.kind = noise_kind_from_string(noise_kind);
    if (*opt_seed) cfg.seed = seed;
    if (*opt_downscale) cfg.downscale = downscale;
    if (*opt_threads) cfg.threads = threads;
    if (*opt_tau) cfg.tau = tau;
    if (opt_steps && *opt_steps && stage_steps) (cfg.*stage_steps).steps = steps;
    return cfg;
  }
};

std::vector<double> parse_angles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  if (out.empty()) throw ConfigError("sweep-angles: empty angle list");
  return out;
}

std::vector<NoiseKind> parse_kinds(const std::string& csv) {
  std::vector<NoiseKind> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(noise_kind_from_string(cell));
  if (out.empty()) throw ConfigError("attack-suite: empty kind list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viewmark: secret-view watermarking for neural radiance fields"};
  app.require_subcommand(1);

  // --- dataset utilities -------------------------------------------------
  auto* gen = app.add_subcommand("make-scene", "generate a synthetic scene in the "
                                               "NeRF-synthetic transforms layout");
  SceneGenConfig gen_cfg;
  std::string gen_out = "data/scene";
  gen->add_option("--out", gen_out, "scene root directory");
  gen->add_option("--size", gen_cfg.image_size, "square image size");
  gen->add_option("--train", gen_cfg.n_train, "training frame count");
  gen->add_option("--val", gen_cfg.n_val, "validation frame count");
  gen->add_option("--test", gen_cfg.n_test, "test frame count");
  gen->add_option("--seed", gen_cfg.seed, "pose sampling seed");

  auto* genwm = app.add_subcommand("make-watermark", "generate a procedural watermark image");
  std::string wm_out = "data/watermark.png";
  int wm_size = 100;
  uint64_t wm_seed = 21;
  genwm->add_option("--out", wm_out, "output PNG path");
  genwm->add_option("--size", wm_size, "square image size");
  genwm->add_option("--seed", wm_seed, "pattern seed");

  // --- training stages ---------------------------------------------------
  auto* tj = app.add_subcommand("train-joint", "jointly pre-train embedder and extractor");
  ConfigArgs tj_args;
  tj_args.attach(tj, true);

  auto* tn = app.add_subcommand("train-nerf", "build the watermarked training set and train "
                                              "the radiance field");
  ConfigArgs tn_args;
  tn_args.attach(tn, true);

  auto* fe = app.add_subcommand("finetune-extractor", "render the secret view, overfit the "
                                                      "extractor, write the key file");
  ConfigArgs fe_args;
  fe_args.attach(fe, true);

  // --- verification and experiments --------------------------------------
  auto* vf = app.add_subcommand("verify", "check ownership with a key file");
  std::string vf_field, vf_ext, vf_key, vf_wm, vf_report;
  double vf_tau = 0.85;
  vf->add_option("--field", vf_field, "field checkpoint")->required();
  vf->add_option("--extractor", vf_ext, "extractor checkpoint")->required();
  vf->add_option("--key", vf_key, "secret key file")->required();
  vf->add_option("--watermark", vf_wm, "watermark image")->required();
  vf->add_option("--tau", vf_tau, "acceptance threshold on NC");
  vf->add_option("--report-out", vf_report, "write the verification report JSON here");

  auto* sw = app.add_subcommand("sweep-angles", "extraction quality vs. rotation of the key");
  ConfigArgs sw_args;
  sw_args.attach(sw, false);
  std::string sw_angles = "0,1,3,7,10,15,30,60,90,180,300,340";
  sw->add_option("--angles", sw_angles, "comma-separated degrees");

  auto* at = app.add_subcommand("attack-suite", "retrain under each noise attack and measure "
                                                "extraction robustness");
  ConfigArgs at_args;
  at_args.attach(at, false);
  std::string at_kinds = "none,gaussian,salt_pepper,speckle,poisson";
  at->add_option("--kinds", at_kinds, "comma-separated noise kinds");

  auto* rp = app.add_subcommand("report", "aggregate a run directory into report.md/json");
  std::string rp_dir;
  rp->add_option("--run", rp_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      generate_scene(gen_out, gen_cfg);
      std::printf("scene written to %s\n", gen_out.c_str());
    } else if (genwm->parsed()) {
      fs::create_directories(fs::path(wm_out).parent_path().empty()
                                 ? "."
                                 : fs::path(wm_out).parent_path().string());
      save_image(generate_watermark(wm_size, wm_size, wm_seed), wm_out);
      std::printf("watermark written to %s\n", wm_out.c_str());
    } else if (tj->parsed()) {
      cmd_train_joint(tj_args.resolve(&RunConfig::joint));
      std::printf("train-joint done\n");
    } else if (tn->parsed()) {
      cmd_train_nerf(tn_args.resolve(&RunConfig::nerf));
      std::printf("train-nerf done\n");
    } else if (fe->parsed()) {
      cmd_finetune_extractor(fe_args.resolve(&RunConfig::finetune));
      std::printf("finetune-extractor done\n");
    } else if (vf->parsed()) {
      const VerificationReport rep =
          cmd_verify(vf_field, vf_ext, vf_key, vf_wm, vf_tau, vf_report);
      std::printf("nc %.6f  psnr %.2f dB  ssim %.4f  -> %s\n", rep.nc_value, rep.psnr_db,
                  rep.ssim_value, rep.accepted ? "ACCEPT" : "REJECT");
      return rep.accepted ? kExitOk : kExitReject;
    } else if (sw->parsed()) {
      cmd_sweep_angles(sw_args.resolve(nullptr), parse_angles(sw_angles));
      std::printf("sweep-angles done\n");
    } else if (at->parsed()) {
      cmd_attack_suite(at_args.resolve(nullptr), parse_kinds(at_kinds));
      std::printf("attack-suite done\n");
    } else if (rp->parsed()) {
      cmd_report(rp_dir);
      std::printf("report written to %s\n", (fs::path(rp_dir) / "report.md").string().c_str());
    }
  } catch (const TamperError& e) {
    std::fprintf(stderr, "tamper detected: %s\n", e.what());
    return kExitTamper;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitOk;
}
