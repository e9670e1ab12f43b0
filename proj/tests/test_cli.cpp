#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  std::string cmd = std::string(BLADE_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (auto n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string src(const std::string& rel) { return std::string(BLADE_SOURCE_DIR) + "/" + rel; }

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("blade-cli-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("plan " + src("data/calvin/calvin.bdl")).code, 2);
  EXPECT_EQ(cli("validate /no/such/file.bdl").code, 2);
  EXPECT_EQ(cli("generate " + src("data/calvin/calvin-config.json") + " --record").code, 2);
  auto r = cli("bench " + src("data/calvin-tasks.json") + " --noise 1.5");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("usage error"), std::string::npos);
}

TEST(Cli, ValidateReportsLine) {
  auto ok = cli("validate " + src("data/calvin/calvin.bdl"));
  EXPECT_EQ(ok.code, 0) << ok.out;

  std::ifstream in(src("data/calvin/calvin-behaviors.bdl"));
  std::ostringstream os;
  os << in.rdbuf();
  std::string text = os.str();
  auto at = text.find("(is-turned-on ?led)");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 19, "(is-glowing ?led)");
  auto line = 1 + std::count(text.begin(), text.begin() + at, '\n');
  auto path = scratch("bad.bdl");
  std::ofstream(path) << text;
  auto r = cli("validate " + path.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find(path.string() + ":" + std::to_string(line) + ":"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("is-glowing"), std::string::npos);
}

TEST(Cli, PlanPrintsSteps) {
  auto r = cli("plan " + src("data/calvin/calvin.bdl") + " " + src("data/calvin/task2.problem"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(lines(r.out), 7u);
  auto r3 = cli("plan " + src("data/calvin/calvin.bdl") + " " + src("data/calvin/task3.problem"));
  EXPECT_EQ(lines(r3.out), 6u);
}

TEST(Cli, VerifyFlagsAnInconsistentCorpus) {
  auto good = scratch("good.txt"), bad = scratch("bad.txt");
  std::ofstream(good) << "(open-drawer drawer) (lift-block-table red-block table) (place-in-drawer red-block drawer)\n";
  std::ofstream(bad) << "(open-drawer drawer) (open-drawer drawer)\n";
  EXPECT_EQ(cli("verify " + src("data/calvin/calvin.bdl") + " " + good.string()).code, 0);
  auto r = cli("verify " + src("data/calvin/calvin.bdl") + " " + bad.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("open-drawer"), std::string::npos);
}

TEST(Cli, BenchWritesReport) {
  auto out = scratch("logs");
  auto r = cli("bench " + src("data/kitchen-tasks.json") + " --states 2 --seeds 1 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("task-7"), std::string::npos);
  auto rep = cli("report " + out.string());
  EXPECT_EQ(rep.code, 0) << rep.out;
  EXPECT_NE(rep.out.find("task-7"), std::string::npos);
}

TEST(Cli, SweepPrintsCurve) {
  auto r = cli("bench " + src("data/calvin-tasks.json") + " --task task-1 --sweep-noise 0,0.1 --episodes 10");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("0.1"), std::string::npos);
}

TEST(Cli, GenerateFromFixtures) {
  auto out = scratch("gen.bdl");
  auto r = cli("generate " + src("data/calvin/calvin-config.json") + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(cli("validate " + out.string()).code, 0);
  EXPECT_EQ(cli("plan " + out.string() + " " + src("data/calvin/task2.problem")).code, 0);
}

TEST(Cli, GenerateFailureExitsOne) {
  auto dir = scratch("fixtures") / "calvin";
  for (const auto& e : fs::directory_iterator(src("data/fixtures/calvin"))) {
    fs::create_directories(dir / e.path().filename());
    fs::copy_file(e.path() / "0.txt", dir / e.path().filename() / "0.txt", fs::copy_options::overwrite_existing);
  }
  std::ofstream(dir / "turn_on_led" / "0.txt") << "I cannot help with that.";
  auto r = cli("generate " + src("data/calvin/calvin-config.json") + " --fixtures " + dir.parent_path().string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("turn_on_led"), std::string::npos) << r.out;
}

TEST(Cli, PromptPrintsTemplate) {
  auto r = cli("prompt " + src("data/calvin/calvin-config.json") + " place_in_drawer");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("**Current Task:** place_in_drawer"), std::string::npos);
}
