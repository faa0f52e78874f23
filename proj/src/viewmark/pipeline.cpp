#include "pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "extractor.hpp"
#include "json.hpp"
#include "plot.hpp"
#include "sha256.hpp"

namespace viewmark {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Exclusive ownership of a run directory for the duration of a stage.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / artifact::kLock) {
    fs::create_directories(dir);
    if (fs::exists(path_)) {
      throw ConfigError(strfmt("run directory is locked (%s exists); remove the stale lock "
                               "if no other process owns it",
                               path_.string().c_str()));
    }
    std::ofstream out(path_);
    out << "locked\n";
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

void apply_threads(const RunConfig& cfg) {
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#else
  (void)cfg;
#endif
}

std::string fmt_full(double v) {
  char buf[40];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw IoError(strfmt("cannot write %s", path.string().c_str()));
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string* header) {
  std::ifstream in(path);
  if (!in) throw IoError(strfmt("cannot read %s", path.string().c_str()));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      if (header) *header = line;
      first = false;
      continue;
    }
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

Scene load_train_scene(const RunConfig& cfg) {
  if (cfg.scene_root.empty()) throw ConfigError("scene.root is not set");
  return load_scene(cfg.scene_root, cfg.train_split, cfg.downscale);
}

Image load_watermark_for(const RunConfig& cfg, const CameraIntrinsics& intr) {
  if (cfg.watermark_path.empty()) throw ConfigError("watermark.path is not set");
  return load_image(cfg.watermark_path, std::make_pair(intr.height, intr.width));
}

// The canonical watermark reference is the quantized PNG stored in the run
// dir by train-joint; every later stage trains and verifies against those
// exact bytes, so the key-file hash covers what was actually used.
Image canonical_watermark(const RunConfig& cfg) {
  const fs::path path = fs::path(cfg.out_dir) / artifact::kWatermark;
  if (!fs::exists(path)) {
    throw IoError(strfmt("missing %s (run train-joint first)", path.string().c_str()));
  }
  return load_image(path.string());
}

SamplingConfig eval_sampling(SamplingConfig scfg) {
  scfg.perturb = false;
  return scfg;
}

ojson report_to_json(const VerificationReport& rep) {
  ojson j;
  j["nc"] = rep.nc_value;
  j["psnr_db"] = rep.psnr_db;
  j["ssim"] = rep.ssim_value;
  j["tau"] = rep.tau;
  j["decision"] = rep.accepted ? "accept" : "reject";
  ojson pose = ojson::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) pose.push_back(rep.pose.c2w(r, c));
  }
  j["pose_c2w_row_major"] = pose;
  j["field_sha256"] = rep.field_sha256;
  j["extractor_sha256"] = rep.extractor_sha256;
  j["watermark_sha256"] = rep.watermark_sha256;
  return j;
}

}  // namespace

void save_key_file(const KeyFile& key, const std::string& path) {
  std::ofstream out(path);
  out << "viewmark-key v1\n";
  out << "width " << key.intrinsics.width << "\n";
  out << "height " << key.intrinsics.height << "\n";
  out << "focal " << fmt_full(key.intrinsics.focal) << "\n";
  out << "t_near " << fmt_full(key.t_near) << "\n";
  out << "t_far " << fmt_full(key.t_far) << "\n";
  out << "c2w";
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out << " " << strfmt("%.16e", key.pose.c2w(r, c));
  }
  out << "\n";
  out << "field_sha256 " << key.field_sha256 << "\n";
  out << "extractor_sha256 " << key.extractor_sha256 << "\n";
  out << "watermark_sha256 " << key.watermark_sha256 << "\n";
  if (!out) throw IoError(strfmt("cannot write key file %s", path.c_str()));
}

KeyFile load_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(strfmt("cannot open key file %s", path.c_str()));
  std::string magic, version;
  in >> magic >> version;
  if (magic != "viewmark-key" || version != "v1") {
    throw DecodeError(strfmt("%s is not a viewmark key file", path.c_str()));
  }
  KeyFile key;
  std::string token;
  while (in >> token) {
    if (token == "width") {
      in >> key.intrinsics.width;
    } else if (token == "height") {
      in >> key.intrinsics.height;
    } else if (token == "focal") {
      in >> key.intrinsics.focal;
    } else if (token == "t_near") {
      in >> key.t_near;
    } else if (token == "t_far") {
      in >> key.t_far;
    } else if (token == "c2w") {
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) in >> key.pose.c2w(r, c);
      }
    } else if (token == "field_sha256") {
      in >> key.field_sha256;
    } else if (token == "extractor_sha256") {
      in >> key.extractor_sha256;
    } else if (token == "watermark_sha256") {
      in >> key.watermark_sha256;
    } else {
      throw DecodeError(strfmt("%s: unknown key-file field '%s'", path.c_str(), token.c_str()));
    }
  }
  if (in.bad()) throw DecodeError(strfmt("%s: truncated key file", path.c_str()));
  require_valid_pose(key.pose, "key file");
  return key;
}

CameraPose resolve_secret_pose(const RunConfig& cfg) {
  const std::string& spec = cfg.secret_pose;
  const size_t colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError(strfmt("secret.pose '%s' is not '<split>:<index>' or 'matrix:...'",
                             spec.c_str()));
  }
  const std::string head = spec.substr(0, colon);
  const std::string tail = spec.substr(colon + 1);
  if (head == "matrix") {
    CameraPose pose;
    std::stringstream ss(tail);
    std::string cell;
    for (int i = 0; i < 16; ++i) {
      if (!std::getline(ss, cell, ',')) throw ConfigError("secret.pose matrix needs 16 values");
      pose.c2w(i / 4, i % 4) = std::stod(cell);
    }
    require_valid_pose(pose, "secret.pose");
    return pose;
  }
  const size_t index = static_cast<size_t>(std::stoul(tail));
  const Scene split = load_scene(cfg.scene_root, head, cfg.downscale);
  if (index >= split.frames.size()) {
    throw ConfigError(strfmt("secret.pose index %zu out of range for split '%s' (%zu frames)",
                             index, head.c_str(), split.frames.size()));
  }
  return split.frames[index].pose;
}

std::vector<size_t> resolve_embed_indices(const RunConfig& cfg, const Scene& scene,
                                          const CameraPose& secret) {
  std::vector<size_t> out;
  if (cfg.embed_indices == "auto") {
    out.push_back(nearest_frame_index(scene, secret));
  } else if (cfg.embed_indices == "all") {
    for (size_t i = 0; i < scene.frames.size(); ++i) out.push_back(i);
  } else {
    std::stringstream ss(cfg.embed_indices);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stoul(cell));
  }
  if (out.empty()) throw ConfigError("embed.indices resolved to an empty set");
  return out;
}

void cmd_train_joint(const RunConfig& cfg) {
  validate(cfg);
  apply_threads(cfg);
  RunLock lock(cfg.out_dir);
  save_run_config(cfg, (fs::path(cfg.out_dir) / artifact::kConfig).string());

  const Scene scene = load_train_scene(cfg);
  const fs::path wm_path = fs::path(cfg.out_dir) / artifact::kWatermark;
  save_image(load_watermark_for(cfg, scene.intrinsics), wm_path.string());
  const Image wm = load_image(wm_path.string());
  const CameraPose secret = resolve_secret_pose(cfg);
  const std::vector<size_t> indices = resolve_embed_indices(cfg, scene, secret);

  std::vector<Image> hosts;
  for (size_t i : indices) hosts.push_back(scene.frames[i].image);

  EmbedderModel embedder = EmbedderModel::init(cfg.seed);
  ExtractorModel extractor = ExtractorModel::init(cfg.seed + 1);
  std::vector<JointCurveRow> curve;
  try {
    train_joint(hosts, wm, cfg.joint, cfg.weights, embedder, extractor, curve);
  } catch (const TrainingError& e) {
    throw TrainingError(strfmt("stage train-joint: %s", e.what()));
  }

  embedder.save((fs::path(cfg.out_dir) / artifact::kEmbedder).string());
  extractor.save((fs::path(cfg.out_dir) / artifact::kExtractorWarm).string());
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : curve) {
    rows.push_back({std::to_string(r.step), fmt_full(r.le), fmt_full(r.ld), fmt_full(r.psnr_db)});
  }
  write_csv(fs::path(cfg.out_dir) / artifact::kJointCurve, "step,loss_le,loss_ld,psnr_db", rows);
}

void cmd_train_nerf(const RunConfig& cfg) {
  validate(cfg);
  apply_threads(cfg);
  RunLock lock(cfg.out_dir);

  const fs::path emb_path = fs::path(cfg.out_dir) / artifact::kEmbedder;
  if (!fs::exists(emb_path)) {
    throw IoError(strfmt("stage train-nerf requires %s (run train-joint first)",
                         emb_path.string().c_str()));
  }
  const EmbedderModel embedder = EmbedderModel::load(emb_path.string());

  const Scene scene = load_train_scene(cfg);
  const Image wm = canonical_watermark(cfg);
  const CameraPose secret = resolve_secret_pose(cfg);
  const std::vector<size_t> indices = resolve_embed_indices(cfg, scene, secret);

  const Scene training_set = build_training_set(scene, wm, embedder, cfg.noise, indices);

  std::optional<Scene> val;
  try {
    val = load_scene(cfg.scene_root, cfg.val_split, cfg.downscale);
  } catch (const IoError&) {
    val.reset();  // validation split is optional
  }

  TrainConfig tcfg = cfg.nerf;
  tcfg.seed = cfg.seed;
  NerfTrainLogs logs;
  RadianceField field;
  try {
    field = train_nerf(training_set, val ? &*val : nullptr, cfg.sampling, tcfg, cfg.encoding,
                       cfg.mlp, cfg.t_near, cfg.t_far, cfg.batch_rays, cfg.lr_decay,
                       cfg.val_every, logs);
  } catch (const TrainingError& e) {
    throw TrainingError(strfmt("stage train-nerf: %s", e.what()));
  }

  field.save((fs::path(cfg.out_dir) / artifact::kField).string());
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : logs.curve) {
    rows.push_back({std::to_string(r.step), fmt_full(r.loss_coarse), fmt_full(r.loss_fine),
                    fmt_full(r.psnr_batch)});
  }
  write_csv(fs::path(cfg.out_dir) / artifact::kNerfCurve, "step,loss_coarse,loss_fine,psnr_batch",
            rows);
  rows.clear();
  for (const auto& r : logs.val) {
    rows.push_back({std::to_string(r.step), std::to_string(r.frame), fmt_full(r.psnr_db)});
  }
  write_csv(fs::path(cfg.out_dir) / artifact::kNerfVal, "step,frame,psnr_db", rows);
}

void cmd_finetune_extractor(const RunConfig& cfg) {
  validate(cfg);
  apply_threads(cfg);
  RunLock lock(cfg.out_dir);

  const fs::path field_path = fs::path(cfg.out_dir) / artifact::kField;
  const fs::path warm_path = fs::path(cfg.out_dir) / artifact::kExtractorWarm;
  if (!fs::exists(field_path)) {
    throw IoError(strfmt("stage finetune-extractor requires %s (run train-nerf first)",
                         field_path.string().c_str()));
  }
  const RadianceField field = RadianceField::load(field_path.string());
  ExtractorModel extractor = fs::exists(warm_path) ? ExtractorModel::load(warm_path.string())
                                                   : ExtractorModel::init(cfg.seed + 1);

  const Scene scene = load_train_scene(cfg);
  const CameraPose secret = resolve_secret_pose(cfg);
  const fs::path wm_path = fs::path(cfg.out_dir) / artifact::kWatermark;
  const Image wm = canonical_watermark(cfg);

  const SamplingConfig scfg = eval_sampling(cfg.sampling);
  const Image secret_render = render_view(field, scene.intrinsics, secret, scfg);
  save_image(secret_render, (fs::path(cfg.out_dir) / artifact::kSecretRender).string());

  std::vector<Image> negatives;
  if (cfg.lambda_neg > 0) {
    for (double deg : {30.0, 90.0, 180.0}) {
      negatives.push_back(
          render_view(field, scene.intrinsics, rotate_about_z(secret, deg), scfg));
    }
  }

  std::vector<FinetuneCurveRow> curve;
  try {
    finetune_extractor(extractor, secret_render, wm, negatives, cfg.finetune, cfg.weights,
                       cfg.lambda_neg, curve);
  } catch (const TrainingError& e) {
    throw TrainingError(strfmt("stage finetune-extractor: %s", e.what()));
  }

  const fs::path ext_path = fs::path(cfg.out_dir) / artifact::kExtractor;
  extractor.save(ext_path.string());
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : curve) {
    rows.push_back({std::to_string(r.step), fmt_full(r.ld), fmt_full(r.nc)});
  }
  write_csv(fs::path(cfg.out_dir) / artifact::kFinetuneCurve, "step,loss_ld,nc", rows);

  // Inference-mode extraction quality, the number verify should reproduce.
  const Image extracted = extract(extractor, secret_render);
  ojson summary;
  summary["nc"] = nc(wm, extracted);
  summary["psnr_db"] = psnr(wm, extracted);
  summary["ssim"] = ssim(wm, extracted);
  std::ofstream(fs::path(cfg.out_dir) / artifact::kFinetuneSummary) << summary.dump(2) << "\n";

  KeyFile key;
  key.intrinsics = scene.intrinsics;
  key.pose = secret;
  key.t_near = cfg.t_near;
  key.t_far = cfg.t_far;
  key.field_sha256 = sha256_file(field_path.string());
  key.extractor_sha256 = sha256_file(ext_path.string());
  key.watermark_sha256 = sha256_file(wm_path.string());
  save_key_file(key, (fs::path(cfg.out_dir) / artifact::kKey).string());
}

VerificationReport cmd_verify(const std::string& field_path, const std::string& extractor_path,
                              const std::string& key_path, const std::string& watermark_path,
                              double tau, const std::string& report_json_out) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("verify: tau must be in [0,1]");
  const KeyFile key = load_key_file(key_path);

  const std::string field_hash = sha256_file(field_path);
  const std::string ext_hash = sha256_file(extractor_path);
  const std::string wm_hash = sha256_file(watermark_path);
  if (field_hash != key.field_sha256) {
    throw TamperError("verify: field checkpoint hash does not match the key file");
  }
  if (ext_hash != key.extractor_sha256) {
    throw TamperError("verify: extractor checkpoint hash does not match the key file");
  }
  if (wm_hash != key.watermark_sha256) {
    throw TamperError("verify: watermark hash does not match the key file");
  }

  const RadianceField field = RadianceField::load(field_path);
  const ExtractorModel extractor = ExtractorModel::load(extractor_path);
  const Image wm =
      load_image(watermark_path, std::make_pair(key.intrinsics.height, key.intrinsics.width));

  RadianceField bounded = field;  // render with the key's depth bounds
  bounded.t_near = key.t_near;
  bounded.t_far = key.t_far;
  const Image render =
      render_view(bounded, key.intrinsics, key.pose, eval_sampling(field.sampling));
  const Image extracted = extract(extractor, render);

  VerificationReport rep;
  rep.nc_value = nc(wm, extracted);
  rep.psnr_db = psnr(wm, extracted);
  rep.ssim_value = ssim(wm, extracted);
  rep.tau = tau;
  rep.accepted = rep.nc_value >= tau;
  rep.pose = key.pose;
  rep.field_sha256 = field_hash;
  rep.extractor_sha256 = ext_hash;
  rep.watermark_sha256 = wm_hash;

  if (!report_json_out.empty()) {
    std::ofstream out(report_json_out);
    out << report_to_json(rep).dump(2) << "\n";
    if (!out) throw IoError(strfmt("cannot write %s", report_json_out.c_str()));
  }
  return rep;
}

void cmd_sweep_angles(const RunConfig& cfg, const std::vector<double>& angles,
                      const LpipsFn& lpips) {
  validate(cfg);
  apply_threads(cfg);
  RunLock lock(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  const KeyFile key = load_key_file((dir / artifact::kKey).string());
  const RadianceField field = RadianceField::load((dir / artifact::kField).string());
  const ExtractorModel extractor = ExtractorModel::load((dir / artifact::kExtractor).string());
  const Image wm = load_image((dir / artifact::kWatermark).string());

  RadianceField bounded = field;
  bounded.t_near = key.t_near;
  bounded.t_far = key.t_far;
  const SamplingConfig scfg = eval_sampling(field.sampling);

  std::vector<std::vector<std::string>> rows;
  std::vector<double> xs, psnrs;
  for (double deg : angles) {
    const CameraPose pose = rotate_about_z(key.pose, deg);
    const Image render = render_view(bounded, key.intrinsics, pose, scfg);
    const Image extracted = extract(extractor, render);
    const double p = psnr(wm, extracted);
    const double s = ssim(wm, extracted);
    const double n = nc(wm, extracted);
    std::string lp = "";
    if (lpips) lp = fmt_full(lpips(wm, extracted));
    rows.push_back({fmt_full(deg), fmt_full(p), fmt_full(s), fmt_full(n), lp});
    xs.push_back(deg);
    psnrs.push_back(p);
  }
  write_csv(dir / artifact::kSweepCsv, "angle_deg,psnr_db,ssim,nc,lpips", rows);
  save_image(line_chart(xs, psnrs, 640, 400, "angle (deg)", "psnr (db)"),
             (dir / artifact::kSweepPlot).string());
}

void cmd_attack_suite(const RunConfig& cfg, const std::vector<NoiseKind>& kinds) {
  validate(cfg);
  apply_threads(cfg);
  RunLock lock(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  const EmbedderModel embedder = EmbedderModel::load((dir / artifact::kEmbedder).string());
  const fs::path warm_path = dir / artifact::kExtractorWarm;

  const Scene scene = load_train_scene(cfg);
  const Image wm = canonical_watermark(cfg);
  const CameraPose secret = resolve_secret_pose(cfg);
  const std::vector<size_t> indices = resolve_embed_indices(cfg, scene, secret);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> labels;
  std::vector<double> ncs;
  for (NoiseKind kind : kinds) {
    NoiseConfig noise = cfg.noise;
    noise.kind = kind;
    const Scene training_set = build_training_set(scene, wm, embedder, noise, indices);

    TrainConfig tcfg = cfg.attack_nerf;
    tcfg.seed = cfg.seed;
    NerfTrainLogs logs;
    RadianceField field =
        train_nerf(training_set, nullptr, cfg.sampling, tcfg, cfg.encoding, cfg.mlp, cfg.t_near,
                   cfg.t_far, cfg.attack_batch_rays, cfg.lr_decay, 0, logs);

    ExtractorModel extractor = fs::exists(warm_path) ? ExtractorModel::load(warm_path.string())
                                                     : ExtractorModel::init(cfg.seed + 1);
    const SamplingConfig scfg = eval_sampling(cfg.sampling);
    const Image render = render_view(field, scene.intrinsics, secret, scfg);
    std::vector<FinetuneCurveRow> curve;
    finetune_extractor(extractor, render, wm, {}, cfg.attack_finetune, cfg.weights, 0.0, curve);
    const Image extracted = extract(extractor, render);

    const fs::path kind_dir = dir / "attacks" / to_string(kind);
    fs::create_directories(kind_dir);
    save_image(render, (kind_dir / "secret_render.png").string());
    save_image(extracted, (kind_dir / "extracted.png").string());

    const double b = ber(wm, extracted);
    const double n = nc(wm, extracted);
    rows.push_back({to_string(kind), fmt_full(b), fmt_full(n), fmt_full(psnr(wm, extracted)),
                    fmt_full(ssim(wm, extracted))});
    labels.push_back(to_string(kind));
    ncs.push_back(n);
  }
  write_csv(dir / artifact::kAttackCsv, "kind,ber,nc,psnr_db,ssim", rows);
  save_image(bar_chart(labels, ncs, 640, 400, "nc"), (dir / artifact::kAttackPlot).string());
}

void cmd_report(const std::string& run_dir) {
  RunLock lock(run_dir);
  const fs::path dir(run_dir);
  std::ostringstream md;
  ojson j;
  md << "# Run report\n\n";

  auto missing = [&](const char* what) { md << "- " << what << ": **missing**\n"; };

  md << "## Imperceptibility (joint stage)\n\n";
  if (fs::exists(dir / artifact::kJointCurve)) {
    const auto rows = read_csv(dir / artifact::kJointCurve, nullptr);
    if (!rows.empty()) {
      const auto& last = rows.back();
      md << "| step | loss_le | loss_ld | psnr_db |\n|---|---|---|---|\n";
      md << "| " << last[0] << " | " << last[1] << " | " << last[2] << " | " << last[3]
         << " |\n\n";
      j["joint"] = {{"step", std::stoi(last[0])},
                    {"loss_le", std::stod(last[1])},
                    {"loss_ld", std::stod(last[2])},
                    {"psnr_db", std::stod(last[3])}};
    }
  } else {
    missing("joint training curve");
  }

  md << "\n## NeRF quality\n\n";
  if (fs::exists(dir / artifact::kNerfVal)) {
    const auto rows = read_csv(dir / artifact::kNerfVal, nullptr);
    if (!rows.empty()) {
      md << "held-out PSNR (last eval): " << rows.back()[2] << " dB\n\n";
      j["nerf"] = {{"val_psnr_db", std::stod(rows.back()[2])}};
    } else {
      md << "no validation split was available\n\n";
    }
  } else {
    missing("nerf validation log");
  }

  md << "\n## Secret-view extraction\n\n";
  if (fs::exists(dir / artifact::kFinetuneSummary)) {
    std::ifstream in(dir / artifact::kFinetuneSummary);
    ojson s = ojson::parse(in);
    md << "| nc | psnr_db | ssim |\n|---|---|---|\n";
    md << "| " << s["nc"].dump() << " | " << s["psnr_db"].dump() << " | " << s["ssim"].dump()
       << " |\n\n";
    j["extraction"] = s;
  } else {
    missing("finetune summary");
  }

  md << "\n## Verification\n\n";
  if (fs::exists(dir / artifact::kVerifyReport)) {
    std::ifstream in(dir / artifact::kVerifyReport);
    ojson v = ojson::parse(in);
    md << "decision: **" << v["decision"].get<std::string>() << "** (nc " << v["nc"].dump()
       << ", tau " << v["tau"].dump() << ")\n\n";
    j["verify"] = v;
  } else {
    missing("verification report");
  }

  md << "\n## Angle sweep\n\n";
  if (fs::exists(dir / artifact::kSweepCsv)) {
    std::string header;
    const auto rows = read_csv(dir / artifact::kSweepCsv, &header);
    md << "| angle | psnr_db | ssim | nc | lpips |\n|---|---|---|---|---|\n";
    ojson arr = ojson::array();
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
      md << "| " << r[0] << " | " << r[1] << " | " << r[2] << " | " << r[3] << " | "
         << (r.size() > 4 ? r[4] : "") << " |\n";
      arr.push_back({{"angle_deg", std::stod(r[0])},
                     {"psnr_db", std::stod(r[1])},
                     {"ssim", std::stod(r[2])},
                     {"nc", std::stod(r[3])}});
      xs.push_back(std::stod(r[0]));
      ys.push_back(std::stod(r[1]));
    }
    j["sweep"] = arr;
    if (!xs.empty()) {
      save_image(line_chart(xs, ys, 640, 400, "angle (deg)", "psnr (db)"),
                 (dir / artifact::kSweepPlot).string());
      md << "\n![angle sweep](" << artifact::kSweepPlot << ")\n";
    }
  } else {
    missing("angle sweep table");
  }

  md << "\n## Noise attacks\n\n";
  if (fs::exists(dir / artifact::kAttackCsv)) {
    const auto rows = read_csv(dir / artifact::kAttackCsv, nullptr);
    md << "| kind | ber | nc | psnr_db | ssim |\n|---|---|---|---|---|\n";
    ojson arr = ojson::array();
    std::vector<std::string> labels;
    std::vector<double> ncs;
    for (const auto& r : rows) {
      md << "| " << r[0] << " | " << r[1] << " | " << r[2] << " | " << r[3] << " | " << r[4]
         << " |\n";
      arr.push_back({{"kind", r[0]},
                     {"ber", std::stod(r[1])},
                     {"nc", std::stod(r[2])},
                     {"psnr_db", std::stod(r[3])},
                     {"ssim", std::stod(r[4])}});
      labels.push_back(r[0]);
      ncs.push_back(std::stod(r[2]));
    }
    j["attacks"] = arr;
    if (!labels.empty()) {
      save_image(bar_chart(labels, ncs, 640, 400, "nc"), (dir / artifact::kAttackPlot).string());
      md << "\n![attack nc](" << artifact::kAttackPlot << ")\n";
    }
  } else {
    missing("attack suite table");
  }

  std::ofstream mdo(dir / artifact::kReportMd);
  mdo << md.str();
  std::ofstream jo(dir / artifact::kReportJson);
  jo << j.dump(2) << "\n";
  if (!mdo || !jo) throw IoError("cmd_report: failed to write report files");
}

}  // namespace viewmark
