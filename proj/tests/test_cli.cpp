#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "moglow/checkpoint.hpp"
#include "moglow/container.hpp"
#include "moglow/keyvalue.hpp"

namespace fs = std::filesystem;
using namespace moglow;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("moglow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Tiny architecture so a few steps run in well under a second.
  std::vector<std::string> tiny_train(const std::string& data, const std::string& out, int steps) const {
    return {"train",       "--data",       data,          "-o",           out,
            "--set",       "flow_steps=2", "--set",       "hidden=8",     "--set",
            "history=2",   "--set",        "window=12",   "--set",        "batch_size=2",
            "--set",       "eval_every=2", "--set",       "train_steps=" + std::to_string(steps)};
  }

  fs::path dir_;
};

// Hips walking forward along +z at 60 fps with two swinging legs.
std::string walking_bvh(int frames) {
  std::ostringstream s;
  s << "HIERARCHY\nROOT hips\n{\n  OFFSET 0 0 0\n"
       "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n";
  for (const char* side : {"left", "right"}) {
    const int x = std::string(side) == "left" ? 10 : -10;
    s << "  JOINT " << side << "_hip\n  {\n    OFFSET " << x << " 0 0\n"
      << "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
      << "    JOINT " << side << "_heel\n    {\n      OFFSET 0 -80 0\n"
      << "      CHANNELS 3 Zrotation Xrotation Yrotation\n"
      << "      End Site\n      {\n        OFFSET 0 0 10\n      }\n    }\n  }\n";
  }
  s << "}\nMOTION\nFrames: " << frames << "\nFrame Time: 0.0166667\n";
  for (int t = 0; t < frames; ++t) {
    const double swing = 25.0 * std::sin(t * 0.1);
    s << "0 85 " << t * 1.5 << " 0 0 0 0 " << swing << " 0 0 0 0 0 " << -swing << " 0 0 0 0\n";
  }
  return s.str();
}

}  // namespace

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"juggle"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"toygen"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"toygen", "-o", path("x.mgmc"), "--seconds", "abc"}).code, cli::kExitUsage);
  const Result help = run({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("train"), std::string::npos);
}

TEST_F(CliTest, ToygenIsByteDeterministicAndEchoesConfig) {
  const Result a = run({"toygen", "--seconds", "20", "--seed", "4", "-o", path("a.mgmc")});
  const Result b = run({"toygen", "--seconds", "20", "--seed", "4", "-o", path("b.mgmc")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(path("a.mgmc")), slurp(path("b.mgmc")));
  EXPECT_NE(a.out.find("seed = 4"), std::string::npos) << a.out;
  const auto meta = motion::load_clip_meta(path("a.mgmc"));
  ASSERT_TRUE(meta.has_value());
  EXPECT_GT(meta->require_int("truth.step_count"), 0);
  run({"toygen", "--seconds", "20", "--seed", "5", "-o", path("c.mgmc")});
  EXPECT_NE(slurp(path("a.mgmc")), slurp(path("c.mgmc")));
}

TEST_F(CliTest, MissingInputExitsWithThree) {
  const Result r = run({"eval", "--clip", path("nothing.mgmc")});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("nothing.mgmc"), std::string::npos) << r.err;
  EXPECT_EQ(run({"sample", "--checkpoint", path("none.mgck"), "--profile", "still", "-o", path("s.mgmc")}).code,
            cli::kExitData);
}

TEST_F(CliTest, UnknownConfigKeyExitsWithTwoAndSuggests) {
  ASSERT_EQ(run({"toygen", "--seconds", "20", "-o", path("d.mgmc")}).code, 0);
  const Result r = run({"train", "--data", path("d.mgmc"), "-o", path("m.mgck"), "--set", "learnin_rate=1"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainResumeSampleEvalPipeline) {
  ASSERT_EQ(run({"toygen", "--seconds", "40", "--seed", "2", "-o", path("d.mgmc")}).code, 0);

  const Result full = run(tiny_train(path("d.mgmc"), path("full.mgck"), 4));
  ASSERT_EQ(full.code, 0) << full.err;
  EXPECT_NE(full.out.find("gaussian baseline"), std::string::npos);
  const std::string metrics = slurp(path("full.mgck") + ".metrics.tsv");
  std::istringstream lines(metrics);
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  EXPECT_EQ(line, "step\ttrain_nll\theldout_nll\tlr");
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 3) << line;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_TRUE(fs::exists(path("full.best.mgck")));

  // Two steps, then resume for the remaining two: same final parameters.
  ASSERT_EQ(run(tiny_train(path("d.mgmc"), path("half.mgck"), 2)).code, 0);
  auto resume = tiny_train(path("d.mgmc"), path("rest.mgck"), 4);
  resume.insert(resume.end(), {"--resume", path("half.mgck")});
  const Result rest = run(resume);
  ASSERT_EQ(rest.code, 0) << rest.err;
  const auto a = train::load_checkpoint(path("full.mgck"));
  const auto b = train::load_checkpoint(path("rest.mgck"));
  a.model.for_each_parameter([&](const std::string& name, const Tensor& t) {
    b.model.for_each_parameter([&](const std::string& n2, const Tensor& t2) {
      if (n2 == name) EXPECT_TRUE(t == t2) << name;
    });
  });

  const std::vector<std::string> sample{"sample", "--checkpoint", path("full.mgck"), "--profile", "mixed",
                                        "--seconds", "6", "--seed", "3"};
  auto s1 = sample, s2 = sample;
  s1.insert(s1.end(), {"-o", path("s1.mgmc")});
  s2.insert(s2.end(), {"-o", path("s2.mgmc")});
  ASSERT_EQ(run(s1).code, 0);
  ASSERT_EQ(run(s2).code, 0);
  EXPECT_EQ(slurp(path("s1.mgmc")), slurp(path("s2.mgmc")));
  EXPECT_EQ(motion::load_clip(path("s1.mgmc")).frames(), 120u);

  const Result ev = run({"eval", "--clip", path("d.mgmc"), "-o", path("r.txt"), "--csv", path("r.csv"),
                         "--svg", path("r.svg")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("v95"), std::string::npos);
  EXPECT_NE(slurp(path("r.txt")).find("bone_length_rmse"), std::string::npos);
  EXPECT_NE(slurp(path("r.svg")).find("<svg"), std::string::npos);
}

TEST_F(CliTest, ControlCsvDrivesSampling) {
  ASSERT_EQ(run({"toygen", "--seconds", "20", "-o", path("d.mgmc")}).code, 0);
  ASSERT_EQ(run(tiny_train(path("d.mgmc"), path("m.mgck"), 1)).code, 0);
  std::ofstream(path("c.csv")) << "t,forward,lateral,rotation\n0,100,0,0\n0.05,100,0,0\n0.1,100,0,0\n";
  ASSERT_EQ(run({"sample", "--checkpoint", path("m.mgck"), "--control", path("c.csv"), "-o", path("s.mgmc")}).code,
            0);
  const auto clip = motion::load_clip(path("s.mgmc"));
  ASSERT_EQ(clip.frames(), 3u);
  // Every control row, the first included, moves the root 5 cm.
  EXPECT_NEAR(motion::root_at(*clip.world_root, 0).z, 5.0, 1e-4);
  EXPECT_NEAR(motion::root_at(*clip.world_root, 2).z, 15.0, 1e-4);
  std::ofstream(path("bad.csv")) << "0,1,2\n";
  EXPECT_EQ(run({"sample", "--checkpoint", path("m.mgck"), "--control", path("bad.csv"), "-o", path("t.mgmc")}).code,
            cli::kExitData);
}

TEST_F(CliTest, PreprocessConvertsBvh) {
  std::ofstream(path("walk.bvh")) << walking_bvh(240);
  const Result r = run({"preprocess", "-i", path("walk.bvh"), "-o", path("walk.mgmc"), "--left", "left_hip",
                        "--right", "right_hip", "--mirror", "left_hip:right_hip,left_heel:right_heel"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto clip = motion::load_clip(path("walk.mgmc"));
  EXPECT_EQ(clip.fps, 20.0);
  EXPECT_EQ(clip.frames(), 80u);
  ASSERT_TRUE(clip.control.has_value());
  // 1.5 cm per source frame at 60 fps is 4.5 cm per output frame.
  EXPECT_NEAR((*clip.control)(40, 0), 4.5, 0.05);
}
