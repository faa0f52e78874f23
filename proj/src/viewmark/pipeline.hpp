#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"

namespace viewmark {

// The ownership credential: secret pose + intrinsics, plus content hashes
// tying the credential to the exact artifacts it vouches for.
struct KeyFile {
  CameraIntrinsics intrinsics;
  CameraPose pose;
  double t_near = kDefaultTNear;
  double t_far = kDefaultTFar;
  std::string field_sha256, extractor_sha256, watermark_sha256;
};

void save_key_file(const KeyFile& key, const std::string& path);
KeyFile load_key_file(const std::string& path);

struct VerificationReport {
  double nc_value = 0, psnr_db = 0, ssim_value = 0;
  bool accepted = false;
  double tau = 0;
  CameraPose pose;
  std::string field_sha256, extractor_sha256, watermark_sha256;
};

// Optional perceptual-metric provider. The pipeline never implements one;
// when absent the LPIPS column in reports stays empty.
using LpipsFn = std::function<double(const Image& reference, const Image& candidate)>;

// Stage entry points. Each writes its artifacts into cfg.out_dir and is
// deterministic for fixed config and seeds.
void cmd_train_joint(const RunConfig& cfg);
void cmd_train_nerf(const RunConfig& cfg);
void cmd_finetune_extractor(const RunConfig& cfg);

// Renders the secret view, extracts, and decides accept iff nc >= tau.
// Throws TamperError when any artifact hash disagrees with the key file.
// report_json_out may be empty to skip writing the document.
VerificationReport cmd_verify(const std::string& field_path, const std::string& extractor_path,
                              const std::string& key_path, const std::string& watermark_path,
                              double tau, const std::string& report_json_out);

void cmd_sweep_angles(const RunConfig& cfg, const std::vector<double>& angles,
                      const LpipsFn& lpips = nullptr);
void cmd_attack_suite(const RunConfig& cfg, const std::vector<NoiseKind>& kinds);
void cmd_report(const std::string& run_dir);

// Shared helpers (also exercised directly by the test suites).
CameraPose resolve_secret_pose(const RunConfig& cfg);
std::vector<size_t> resolve_embed_indices(const RunConfig& cfg, const Scene& scene,
                                          const CameraPose& secret);

// Artifact names inside a run directory.
namespace artifact {
inline constexpr const char* kConfig = "config.ini";
inline constexpr const char* kEmbedder = "embedder.ckpt";
inline constexpr const char* kExtractorWarm = "extractor_warm.ckpt";
inline constexpr const char* kJointCurve = "joint_curve.csv";
inline constexpr const char* kField = "field.ckpt";
inline constexpr const char* kNerfCurve = "nerf_curve.csv";
inline constexpr const char* kNerfVal = "nerf_val.csv";
inline constexpr const char* kExtractor = "extractor.ckpt";
inline constexpr const char* kFinetuneCurve = "finetune_curve.csv";
inline constexpr const char* kFinetuneSummary = "finetune_summary.json";
inline constexpr const char* kKey = "secret.key";
inline constexpr const char* kSecretRender = "secret_render.png";
inline constexpr const char* kWatermark = "watermark.png";
inline constexpr const char* kVerifyReport = "verify_report.json";
inline constexpr const char* kSweepCsv = "sweep_angles.csv";
inline constexpr const char* kSweepPlot = "sweep_psnr.png";
inline constexpr const char* kAttackCsv = "attack_suite.csv";
inline constexpr const char* kAttackPlot = "attack_nc.png";
inline constexpr const char* kReportMd = "report.md";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kLock = "run.lock";
}  // namespace artifact

}  // namespace viewmark
