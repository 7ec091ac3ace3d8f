#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "moglow/binary_io.hpp"
#include "moglow/bvh.hpp"
#include "moglow/checkpoint.hpp"
#include "moglow/config.hpp"
#include "moglow/container.hpp"
#include "moglow/control_profiles.hpp"
#include "moglow/dataset.hpp"
#include "moglow/error.hpp"
#include "moglow/footsteps.hpp"
#include "moglow/preprocess.hpp"
#include "moglow/sampler.hpp"
#include "moglow/session.hpp"
#include "moglow/toy_walker.hpp"
#include "moglow/trainer.hpp"
#include "moglow/ws_server.hpp"

namespace moglow::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

// Installs the Ctrl-C handler for the lifetime of a training run.
class InterruptGuard {
 public:
  InterruptGuard() {
    g_interrupted.store(false);
    previous_ = std::signal(SIGINT, on_sigint);
  }
  ~InterruptGuard() { std::signal(SIGINT, previous_); }
  InterruptGuard(const InterruptGuard&) = delete;
  InterruptGuard& operator=(const InterruptGuard&) = delete;

 private:
  void (*previous_)(int);
};

// Relative inputs that do not exist are looked up under MOGLOW_DATA_DIR.
fs::path resolve_input(const std::string& path) {
  fs::path p(path);
  if (p.is_relative() && !fs::exists(p)) {
    if (const char* dir = std::getenv("MOGLOW_DATA_DIR")) {
      fs::path candidate = fs::path(dir) / p;
      if (fs::exists(candidate)) return candidate;
    }
  }
  if (!fs::exists(p)) throw LoadError("no such file: " + p.string());
  return p;
}

void echo_config(std::ostream& out, const std::string& command, const KeyValue& kv) {
  out << "# moglow " << command << " resolved config\n" << kv.to_text();
  out.flush();
}

std::string join_args(const std::vector<std::string>& args) {
  std::string s = "moglow";
  for (const std::string& a : args) s += " " + a;
  return s;
}

std::vector<std::pair<int, int>> parse_mirror_pairs(const motion::Skeleton& skeleton,
                                                    const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("mirror pair '" + item + "' needs a ':'");
    const int a = skeleton.find(item.substr(0, colon));
    const int b = skeleton.find(item.substr(colon + 1));
    if (a < 0 || b < 0) throw ConfigError("mirror pair '" + item + "' names an unknown joint");
    out.emplace_back(a, b);
  }
  return out;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string input;
  std::string output;
  double fps = 20.0;
  double scale = 1.0;
  double sigma = 10.0;
  std::string hip;
  std::string left;
  std::string right;
  std::string heading = "velocity";
  std::string mirror;
};

int cmd_preprocess(const PreprocessArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  KeyValue cfg;
  cfg.set("input", a.input);
  cfg.set_real("fps", a.fps);
  cfg.set_real("scale", a.scale);
  cfg.set_real("sigma", a.sigma);
  cfg.set("hip", a.hip);
  cfg.set("left", a.left);
  cfg.set("right", a.right);
  cfg.set("heading", a.heading);
  cfg.set("mirror", a.mirror);
  cfg.set_int("seed", 0);
  echo_config(out, "preprocess", cfg);

  const motion::BvhDocument doc = motion::load_bvh(resolve_input(a.input));
  Tensor positions = motion::bvh_positions(doc);
  for (Real& v : positions.data()) v *= a.scale;
  motion::Skeleton skeleton = doc.skeleton();
  for (motion::Vec3& o : skeleton.offsets)
    for (Real& v : o) v *= a.scale;
  if (!a.mirror.empty()) {
    std::vector<int> table(skeleton.joints());
    for (std::size_t j = 0; j < table.size(); ++j) table[j] = static_cast<int>(j);
    for (auto [l, r] : parse_mirror_pairs(skeleton, a.mirror)) {
      table[l] = r;
      table[r] = l;
    }
    skeleton.mirror = table;
  }
  motion::RootExtractionOptions opts;
  opts.sigma_frames = a.sigma;
  opts.hip_joint = a.hip;
  opts.left_joint = a.left;
  opts.right_joint = a.right;
  if (a.heading == "velocity") {
    opts.heading = motion::HeadingMode::velocity;
  } else if (a.heading == "transverse") {
    opts.heading = motion::HeadingMode::transverse;
  } else {
    throw ConfigError("heading must be 'velocity' or 'transverse'");
  }
  motion::MotionClip clip = motion::clip_from_positions(positions, skeleton, doc.fps(), opts);
  if (a.fps < clip.fps) clip = motion::downsample(clip, a.fps);
  cfg.set("command", join_args(argv));
  motion::save_clip(a.output, clip, &cfg);
  out << "wrote " << a.output << ": " << clip.frames() << " frames at " << clip.fps << " fps, "
      << clip.skeleton.joints() << " joints\n";
  return kExitOk;
}

// -------------------------------------------------------------------- toygen

struct ToygenArgs {
  double seconds = 600.0;
  std::uint64_t seed = 1;
  double fps = 20.0;
  double max_speed = 100.0;
  std::string output;
};

int cmd_toygen(const ToygenArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  KeyValue cfg;
  cfg.set_real("seconds", a.seconds);
  cfg.set_real("fps", a.fps);
  cfg.set_real("max_speed", a.max_speed);
  cfg.set_int("seed", static_cast<std::int64_t>(a.seed));
  echo_config(out, "toygen", cfg);

  motion::ToyWalkerSpec spec;
  spec.seconds = a.seconds;
  spec.fps = a.fps;
  spec.max_speed = a.max_speed;
  const motion::ToyWalker toy = motion::generate_toy_walker(spec, a.seed);
  KeyValue meta = cfg;
  meta.set("command", join_args(argv));
  meta.set_int("truth.step_count", static_cast<std::int64_t>(toy.truth.step_count));
  meta.set_real("truth.mean_duration", toy.truth.mean_duration);
  meta.set_real("truth.std_duration", toy.truth.std_duration);
  motion::save_clip(a.output, toy.clip, &meta);
  out << "wrote " << a.output << ": " << toy.clip.frames() << " frames, " << toy.truth.step_count
      << " ground-truth steps\n";
  return kExitOk;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string profile = "desk";
  std::vector<std::string> data;
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output;
  std::string resume;
  std::string metrics;
  std::size_t log_every = 50;
};

KeyValue parse_overrides(const std::vector<std::string>& items) {
  KeyValue kv;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + item + "' must be key=value");
    kv.set(item.substr(0, eq), item.substr(eq + 1));
  }
  return kv;
}

train::Checkpoint make_checkpoint(const train::Trainer& trainer, const motion::Skeleton& skeleton,
                                  const KeyValue& provenance, bool best) {
  train::Checkpoint ckpt{trainer.profile(), best ? trainer.best_model() : trainer.model(),
                         std::nullopt, skeleton, provenance};
  if (!best) ckpt.trainer = trainer.state();
  return ckpt;
}

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  if (a.data.empty()) throw ConfigError("train needs at least one --data clip");
  std::vector<motion::MotionClip> clips;
  std::vector<fs::path> paths;
  for (const std::string& d : a.data) {
    paths.push_back(resolve_input(d));
    clips.push_back(motion::load_clip(paths.back()));
  }
  const std::size_t pose_dims = clips.front().pose_dims();

  const KeyValue overrides = parse_overrides(a.overrides);
  std::optional<train::Checkpoint> resumed;
  RunProfile profile;
  if (!a.resume.empty()) {
    resumed = train::load_checkpoint(resolve_input(a.resume));
    profile = resumed->profile;
    if (!a.config_file.empty()) apply_config(profile, KeyValue::parse(io::read_text(resolve_input(a.config_file))));
    apply_config(profile, overrides);
  } else {
    const std::string file_text =
        a.config_file.empty() ? std::string() : io::read_text(resolve_input(a.config_file));
    profile = resolve_config(a.profile, pose_dims, file_text, overrides);
  }
  if (profile.model.pose_dims != pose_dims) {
    throw DimensionError("data has " + std::to_string(pose_dims) + " pose dims, model expects " +
                         std::to_string(profile.model.pose_dims));
  }
  profile.model.fps = clips.front().fps;
  KeyValue resolved = to_keyvalue(profile);
  resolved.set("config.profile", profile.name);
  echo_config(out, "train", resolved);

  KeyValue provenance;
  provenance.set("command", join_args(argv));
  provenance.set_int("seed", static_cast<std::int64_t>(profile.train.seed));
  for (std::size_t i = 0; i < paths.size(); ++i) provenance.set("data." + std::to_string(i), paths[i].string());

  train::PreparedData data = train::prepare_data(clips, profile.train, profile.model.history);
  out << "windows: " << data.train.size() << " train, " << data.heldout.size() << " held-out\n";
  if (data.heldout.size() > 0) {
    out << "held-out gaussian baseline nll: "
        << format_real(train::gaussian_baseline_nll(data.heldout, profile.model.history)) << "\n";
  }
  MoGlowModel model = resumed ? resumed->model : MoGlowModel::create(profile.model, profile.train.seed);
  std::optional<train::TrainerState> state;
  if (resumed) state = resumed->trainer;
  train::Trainer trainer(std::move(model), profile, std::move(data), std::move(state));

  const fs::path metrics_path = a.metrics.empty() ? fs::path(a.output + ".metrics.tsv") : fs::path(a.metrics);
  std::ofstream metrics(metrics_path, resumed ? std::ios::app : std::ios::trunc);
  if (!metrics) throw LoadError("cannot write metrics file " + metrics_path.string());
  if (!resumed) metrics << "step\ttrain_nll\theldout_nll\tlr\n";

  const motion::Skeleton& skeleton = clips.front().skeleton;
  InterruptGuard guard;
  bool interrupted = false;
  while (!trainer.done()) {
    if (g_interrupted.load()) {
      interrupted = true;
      break;
    }
    const train::MetricRow row = trainer.step();
    const std::string line = train::format_metric(row);
    metrics << line << "\n";
    if (row.clipped) out << "step " << row.step << ": gradient clipped\n";
    if (row.heldout_nll || row.step % a.log_every == 0 || row.step == 1) out << line << "\n" << std::flush;
  }
  metrics.flush();

  train::save_checkpoint(a.output, make_checkpoint(trainer, skeleton, provenance, false));
  if (trainer.has_heldout()) {
    const fs::path best = fs::path(a.output).replace_extension(".best.mgck");
    train::save_checkpoint(best, make_checkpoint(trainer, skeleton, provenance, true));
    out << "best held-out checkpoint: " << best.string() << "\n";
  }
  out << (interrupted ? "interrupted; saved " : "saved ") << a.output << " at step "
      << trainer.steps_done() << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- sample

struct SampleArgs {
  std::string checkpoint;
  std::string control;
  std::string profile;
  double seconds = 60.0;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::string init_clip;
  std::size_t init_frame = 0;
  std::string output;
};

int cmd_sample(const SampleArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  if (a.control.empty() == a.profile.empty()) {
    throw ConfigError("give exactly one of --control CSV or --profile NAME");
  }
  KeyValue cfg;
  cfg.set("checkpoint", a.checkpoint);
  cfg.set("control", a.control.empty() ? a.profile : a.control);
  cfg.set_real("seconds", a.seconds);
  cfg.set_real("temperature", a.temperature);
  cfg.set("init_clip", a.init_clip);
  cfg.set_int("init_frame", static_cast<std::int64_t>(a.init_frame));
  cfg.set_int("seed", static_cast<std::int64_t>(a.seed));
  echo_config(out, "sample", cfg);

  const train::Checkpoint ckpt = train::load_checkpoint(resolve_input(a.checkpoint));
  if (!ckpt.skeleton) throw LoadError("checkpoint " + a.checkpoint + " carries no skeleton");
  const Real fps = ckpt.model.config.fps;
  const Tensor control = a.control.empty()
                             ? motion::synthetic_control(a.profile, a.seconds, fps)
                             : motion::parse_control_csv(io::read_text(resolve_input(a.control)), fps);
  std::optional<Tensor> init_poses;
  std::optional<Tensor> init_controls;
  if (!a.init_clip.empty()) {
    const motion::MotionClip seed_clip = motion::load_clip(resolve_input(a.init_clip));
    const std::size_t tau = ckpt.model.config.history;
    if (!seed_clip.control || seed_clip.frames() < a.init_frame + tau) {
      throw ContractError("init clip needs control and at least " + std::to_string(a.init_frame + tau) +
                          " frames");
    }
    const motion::MotionClip snippet =
        motion::slice_clip(seed_clip, {a.init_frame, a.init_frame + tau});
    init_poses = snippet.poses;
    init_controls = *snippet.control;
  }
  motion::MotionClip clip = sample_sequence(ckpt.model, *ckpt.skeleton, control,
                                            NoiseSpec{a.temperature, a.seed}, init_poses, init_controls);
  cfg.set("command", join_args(argv));
  motion::save_clip(a.output, clip, &cfg);
  out << "wrote " << a.output << ": " << clip.frames() << " frames\n";
  return kExitOk;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string clip;
  std::string feet = "heels";
  double tol_step = 1.0;
  double tol_max = 60.0;
  std::size_t min_frames = 2;
  std::string output;
  std::string csv;
  std::string svg;
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  KeyValue cfg;
  cfg.set("clip", a.clip);
  cfg.set("feet", a.feet);
  cfg.set_real("tol_step", a.tol_step);
  cfg.set_real("tol_max", a.tol_max);
  cfg.set_int("min_frames", static_cast<std::int64_t>(a.min_frames));
  cfg.set_int("seed", 0);
  echo_config(out, "eval", cfg);

  const fs::path path = resolve_input(a.clip);
  const motion::MotionClip clip = motion::load_clip(path);
  const std::vector<int> feet = eval::resolve_feet(clip.skeleton, a.feet);
  const eval::FootstepReport report =
      eval::footstep_curve(clip, feet, {a.tol_step, a.tol_max, a.min_frames});
  KeyValue kv = cfg;
  kv.set("command", join_args(argv));
  if (auto meta = motion::load_clip_meta(path)) {
    for (const auto& [k, v] : meta->entries()) kv.set("clip." + k, v);
  }
  const KeyValue summary =
      eval::report_keyvalue(report, eval::bone_length_rmse(clip), eval::stillness_metric(clip));
  kv.merge(summary);
  const std::string text = kv.to_text();
  out << summary.to_text();
  if (!a.output.empty()) io::write_text(a.output, text);
  if (!a.csv.empty()) io::write_text(a.csv, eval::curve_csv(report));
  if (!a.svg.empty()) io::write_text(a.svg, eval::curve_svg(report, path.filename().string()));
  return kExitOk;
}

// --------------------------------------------------------------------- serve

struct ServeArgs {
  std::string dir;
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;
  unsigned threads = 1;
  double idle_timeout = 300.0;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  std::string dir = a.dir;
  if (dir.empty()) {
    const char* env = std::getenv("MOGLOW_DATA_DIR");
    dir = env ? env : ".";
  }
  KeyValue cfg;
  cfg.set("checkpoints", dir);
  cfg.set("address", a.address);
  cfg.set_int("port", a.port);
  cfg.set_int("threads", a.threads);
  cfg.set_real("idle_timeout", a.idle_timeout);
  cfg.set_int("seed", 0);
  echo_config(out, "serve", cfg);
  if (!fs::is_directory(dir)) throw LoadError("no such directory: " + dir);

  service::ServiceCore core(service::directory_provider(dir),
                            std::chrono::milliseconds(static_cast<long long>(a.idle_timeout * 1000.0)));
  service::WsServer server(core, {a.address, a.port, a.threads, std::chrono::seconds(5)});
  out << "listening on ws://" << a.address << ":" << server.port() << "/\n" << std::flush;
  server.run();
  return kExitOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const UndefinedResultError*>(&e)) {
    return kExitNumeric;
  }
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ContractError*>(&e)) {
    return kExitUsage;
  }
  return kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MoGlow motion model: data preparation, training, sampling, evaluation, serving"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  PreprocessArgs pre;
  auto* preprocess = app.add_subcommand("preprocess", "Convert a BVH capture into an MGMC clip");
  preprocess->add_option("-i,--input", pre.input, "BVH file")->required();
  preprocess->add_option("-o,--output", pre.output, "Output clip (.mgmc)")->required();
  preprocess->add_option("--fps", pre.fps, "Target frame rate")->capture_default_str();
  preprocess->add_option("--scale", pre.scale, "Multiplier from file units to cm")->capture_default_str();
  preprocess->add_option("--sigma", pre.sigma, "Root filter std in source frames")->capture_default_str();
  preprocess->add_option("--hip", pre.hip, "Root joint (default: first joint)");
  preprocess->add_option("--left", pre.left, "Left joint of the transverse axis");
  preprocess->add_option("--right", pre.right, "Right joint of the transverse axis");
  preprocess->add_option("--heading", pre.heading, "velocity | transverse")->capture_default_str();
  preprocess->add_option("--mirror", pre.mirror, "Left:Right joint pairs, comma separated");

  ToygenArgs toy;
  auto* toygen = app.add_subcommand("toygen", "Generate a procedural toy-walker clip");
  toygen->add_option("--seconds", toy.seconds)->capture_default_str();
  toygen->add_option("--seed", toy.seed)->capture_default_str();
  toygen->add_option("--fps", toy.fps)->capture_default_str();
  toygen->add_option("--max-speed", toy.max_speed, "cm/s")->capture_default_str();
  toygen->add_option("-o,--output", toy.output)->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Maximum-likelihood training");
  train->add_option("--profile", tr.profile, "desk | paper")->capture_default_str();
  train->add_option("--data", tr.data, "Training clips (.mgmc), repeatable")->required();
  train->add_option("--config", tr.config_file, "key = value settings file");
  train->add_option("--set", tr.overrides, "key=value override, repeatable");
  train->add_option("-o,--output", tr.output, "Checkpoint (.mgck)")->required();
  train->add_option("--resume", tr.resume, "Continue from a checkpoint");
  train->add_option("--metrics", tr.metrics, "Metrics TSV (default: <output>.metrics.tsv)");
  train->add_option("--log-every", tr.log_every)->capture_default_str()->check(CLI::PositiveNumber);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Generate motion from a control signal");
  sample->add_option("--checkpoint", sa.checkpoint)->required();
  sample->add_option("--control", sa.control, "CSV of t, forward, lateral, rotation (cm/s, rad/s)");
  sample->add_option("--profile", sa.profile, "still | straight | turn | stop | mixed");
  sample->add_option("--seconds", sa.seconds, "Length for --profile")->capture_default_str();
  sample->add_option("--seed", sa.seed)->capture_default_str();
  sample->add_option("--temperature", sa.temperature)->capture_default_str();
  sample->add_option("--init-clip", sa.init_clip, "Seed the history from this clip");
  sample->add_option("--init-frame", sa.init_frame)->capture_default_str();
  sample->add_option("-o,--output", sa.output)->required();

  EvalArgs ev;
  auto* evaluate = app.add_subcommand("eval", "Footstep and bone-length statistics of a clip");
  evaluate->add_option("--clip", ev.clip)->required();
  evaluate->add_option("--feet", ev.feet, "heels | toes | joint list")->capture_default_str();
  evaluate->add_option("--tol-step", ev.tol_step, "cm/s")->capture_default_str();
  evaluate->add_option("--tol-max", ev.tol_max, "cm/s")->capture_default_str();
  evaluate->add_option("--min-frames", ev.min_frames)->capture_default_str();
  evaluate->add_option("-o,--output", ev.output, "Report file");
  evaluate->add_option("--csv", ev.csv, "Curve as CSV");
  evaluate->add_option("--svg", ev.svg, "Curve as SVG");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "WebSocket streaming sampler");
  serve->add_option("--checkpoints", sv.dir, "Checkpoint directory (default: $MOGLOW_DATA_DIR or .)");
  serve->add_option("--address", sv.address)->capture_default_str();
  serve->add_option("--port", sv.port)->capture_default_str();
  serve->add_option("--threads", sv.threads)->capture_default_str();
  serve->add_option("--idle-timeout", sv.idle_timeout, "seconds")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*preprocess) return cmd_preprocess(pre, args, out);
    if (*toygen) return cmd_toygen(toy, args, out);
    if (*train) return cmd_train(tr, args, out);
    if (*sample) return cmd_sample(sa, args, out);
    if (*evaluate) return cmd_eval(ev, args, out);
    if (*serve) return cmd_serve(sv, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace moglow::cli
