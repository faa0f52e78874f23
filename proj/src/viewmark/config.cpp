#include "config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace viewmark {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct KeyMap {
  std::map<std::string, std::string> kv;
  std::map<std::string, bool> used;
  std::string origin;

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  template <typename T>
  void get(const std::string& key, T& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    used[key] = true;
    std::istringstream ss(it->second);
    T v{};
    if constexpr (std::is_same_v<T, std::string>) {
      v = it->second;
    } else if constexpr (std::is_same_v<T, bool>) {
      std::string s = it->second;
      if (s == "true" || s == "1") {
        v = true;
      } else if (s == "false" || s == "0") {
        v = false;
      } else {
        throw ConfigError(strfmt("%s: key %s expects a bool, got '%s'", origin.c_str(),
                                 key.c_str(), s.c_str()));
      }
    } else {
      ss >> v;
      if (ss.fail()) {
        throw ConfigError(strfmt("%s: key %s has malformed value '%s'", origin.c_str(),
                                 key.c_str(), it->second.c_str()));
      }
    }
    out = v;
  }

  void finish() const {
    for (const auto& [key, value] : kv) {
      if (!used.count(key)) {
        throw ConfigError(strfmt("%s: unknown config key '%s'", origin.c_str(), key.c_str()));
      }
    }
  }
};

KeyMap parse_ini(const std::string& text, const std::string& origin) {
  KeyMap map;
  map.origin = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(strfmt("%s:%d: expected key = value", origin.c_str(), lineno));
    }
    const std::string key = section.empty() ? trim(line.substr(0, eq))
                                            : section + "." + trim(line.substr(0, eq));
    map.kv[key] = trim(line.substr(eq + 1));
  }
  return map;
}

void get_train(KeyMap& m, const std::string& prefix, TrainConfig& cfg) {
  m.get(prefix + ".steps", cfg.steps);
  m.get(prefix + ".lr", cfg.lr);
  m.get(prefix + ".log_every", cfg.log_every);
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw ConfigError("run.tau must be in (0,1)");
  if (cfg.downscale < 1) throw ConfigError("scene.downscale must be >= 1");
  if (!(cfg.t_near >= 0 && cfg.t_near < cfg.t_far)) throw ConfigError("nerf t bounds invalid");
  viewmark::validate(cfg.sampling);
  viewmark::validate(cfg.noise);
  if (cfg.weights.alpha < 0 || cfg.weights.beta < 0 || cfg.weights.gamma < 0 ||
      cfg.weights.mu < 0) {
    throw ConfigError("loss weights must be >= 0");
  }
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  KeyMap m = parse_ini(text, origin);
  RunConfig c;

  m.get("scene.root", c.scene_root);
  m.get("scene.name", c.scene_name);
  m.get("scene.downscale", c.downscale);
  m.get("scene.train_split", c.train_split);
  m.get("scene.val_split", c.val_split);

  m.get("watermark.path", c.watermark_path);
  m.get("secret.pose", c.secret_pose);
  m.get("embed.indices", c.embed_indices);

  std::string kind = to_string(c.noise.kind);
  m.get("noise.kind", kind);
  c.noise.kind = noise_kind_from_string(kind);
  m.get("noise.gaussian_sigma", c.noise.gaussian_sigma);
  m.get("noise.sp_amount", c.noise.sp_amount);
  m.get("noise.speckle_sigma", c.noise.speckle_sigma);
  m.get("noise.poisson_scale", c.noise.poisson_scale);
  m.get("noise.seed", c.noise.seed);
  m.get("noise.apply_to_embedded", c.noise.apply_to_embedded);

  get_train(m, "joint", c.joint);
  get_train(m, "nerf", c.nerf);
  m.get("nerf.n_coarse", c.sampling.n_coarse);
  m.get("nerf.n_fine", c.sampling.n_fine);
  m.get("nerf.perturb", c.sampling.perturb);
  m.get("nerf.white_background", c.sampling.white_background);
  m.get("nerf.l_pos", c.encoding.l_pos);
  m.get("nerf.l_dir", c.encoding.l_dir);
  m.get("nerf.include_input", c.encoding.include_input);
  m.get("nerf.depth", c.mlp.depth);
  m.get("nerf.width", c.mlp.width);
  m.get("nerf.skip_layer", c.mlp.skip_layer);
  m.get("nerf.color_width", c.mlp.color_width);
  m.get("nerf.t_near", c.t_near);
  m.get("nerf.t_far", c.t_far);
  m.get("nerf.batch_rays", c.batch_rays);
  m.get("nerf.lr_decay", c.lr_decay);
  m.get("nerf.val_every", c.val_every);

  get_train(m, "extract", c.finetune);
  m.get("extract.lambda_neg", c.lambda_neg);

  get_train(m, "attack", c.attack_nerf);
  get_train(m, "attack_extract", c.attack_finetune);
  m.get("attack.batch_rays", c.attack_batch_rays);

  m.get("loss.alpha", c.weights.alpha);
  m.get("loss.beta", c.weights.beta);
  m.get("loss.gamma", c.weights.gamma);
  m.get("loss.mu", c.weights.mu);

  m.get("run.out_dir", c.out_dir);
  m.get("run.seed", c.seed);
  m.get("run.tau", c.tau);
  m.get("run.threads", c.threads);

  m.finish();
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(strfmt("cannot open config %s", path.c_str()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

std::string dump_run_config(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "[scene]\n"
      << "root = " << c.scene_root << "\n"
      << "name = " << c.scene_name << "\n"
      << "downscale = " << c.downscale << "\n"
      << "train_split = " << c.train_split << "\n"
      << "val_split = " << c.val_split << "\n\n";
  out << "[watermark]\npath = " << c.watermark_path << "\n\n";
  out << "[secret]\npose = " << c.secret_pose << "\n\n";
  out << "[embed]\nindices = " << c.embed_indices << "\n\n";
  out << "[noise]\n"
      << "kind = " << to_string(c.noise.kind) << "\n"
      << "gaussian_sigma = " << c.noise.gaussian_sigma << "\n"
      << "sp_amount = " << c.noise.sp_amount << "\n"
      << "speckle_sigma = " << c.noise.speckle_sigma << "\n"
      << "poisson_scale = " << c.noise.poisson_scale << "\n"
      << "seed = " << c.noise.seed << "\n"
      << "apply_to_embedded = " << (c.noise.apply_to_embedded ? "true" : "false") << "\n\n";
  out << "[joint]\n"
      << "steps = " << c.joint.steps << "\nlr = " << c.joint.lr
      << "\nlog_every = " << c.joint.log_every << "\n\n";
  out << "[nerf]\n"
      << "steps = " << c.nerf.steps << "\nlr = " << c.nerf.lr
      << "\nlog_every = " << c.nerf.log_every << "\n"
      << "n_coarse = " << c.sampling.n_coarse << "\nn_fine = " << c.sampling.n_fine << "\n"
      << "perturb = " << (c.sampling.perturb ? "true" : "false") << "\n"
      << "white_background = " << (c.sampling.white_background ? "true" : "false") << "\n"
      << "l_pos = " << c.encoding.l_pos << "\nl_dir = " << c.encoding.l_dir << "\n"
      << "include_input = " << (c.encoding.include_input ? "true" : "false") << "\n"
      << "depth = " << c.mlp.depth << "\nwidth = " << c.mlp.width
      << "\nskip_layer = " << c.mlp.skip_layer << "\ncolor_width = " << c.mlp.color_width << "\n"
      << "t_near = " << c.t_near << "\nt_far = " << c.t_far << "\n"
      << "batch_rays = " << c.batch_rays << "\nlr_decay = " << c.lr_decay << "\n"
      << "val_every = " << c.val_every << "\n\n";
  out << "[extract]\n"
      << "steps = " << c.finetune.steps << "\nlr = " << c.finetune.lr
      << "\nlog_every = " << c.finetune.log_every << "\nlambda_neg = " << c.lambda_neg << "\n\n";
  out << "[attack]\n"
      << "steps = " << c.attack_nerf.steps << "\nlr = " << c.attack_nerf.lr
      << "\nlog_every = " << c.attack_nerf.log_every << "\nbatch_rays = " << c.attack_batch_rays
      << "\n\n";
  out << "[attack_extract]\n"
      << "steps = " << c.attack_finetune.steps << "\nlr = " << c.attack_finetune.lr
      << "\nlog_every = " << c.attack_finetune.log_every << "\n\n";
  out << "[loss]\n"
      << "alpha = " << c.weights.alpha << "\nbeta = " << c.weights.beta
      << "\ngamma = " << c.weights.gamma << "\nmu = " << c.weights.mu << "\n\n";
  out << "[run]\n"
      << "out_dir = " << c.out_dir << "\nseed = " << c.seed << "\ntau = " << c.tau
      << "\nthreads = " << c.threads << "\n";
  return out.str();
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  out << dump_run_config(cfg);
  if (!out) throw IoError(strfmt("cannot write config %s", path.c_str()));
}

}  // namespace viewmark
