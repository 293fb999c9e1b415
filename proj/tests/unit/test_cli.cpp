#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "movdet/cli.hpp"
#include "movdet/synth.hpp"

using namespace movdet;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"detect"}).code == kExitUsage);
  CHECK(run({"detect", "x", "--bogus"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
}

TEST_CASE("data errors") {
  test::TempDir tmp("t");
  CHECK(run({"detect", (tmp.path() / "nope").string()}).code == kExitData);
  CHECK(run({"evaluate", (tmp.path() / "nope").string()}).code == kExitData);
  CHECK(run({"detect", tmp.path().string(), "--set", "unknown=1"}).code == kExitData);
}

TEST_CASE("help lists every key") {
  const auto r = run({"detect", "--help"});
  CHECK(r.code == kExitOk);
  for (const auto& k : config_keys()) CHECK(r.out.find(std::string(k.name)) != std::string::npos);
}

TEST_CASE("synth, detect and evaluate on disk") {
  test::TempDir tmp("t");
  SynthConfig c;
  c.width = 160;
  c.height = 120;
  c.frame_count = 10;
  c.camera.pan_x = 1;
  c.sprites.push_back({30, 40, 12, 12, 2, 0, 40});
  {
    std::ofstream(tmp.path() / "s.cfg") << format_synth_config(c);
  }
  const fs::path seq = tmp.path() / "seq";
  REQUIRE(run({"synth", (tmp.path() / "s.cfg").string(), seq.string()}).code == kExitOk);

  const auto det = run({"detect", seq.string(), "--out", (tmp.path() / "det").string()});
  REQUIRE(det.code == kExitOk);
  int files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path() / "det")) files += e.path().extension() == ".txt";
  CHECK(files == 10);

  // Ground truth scored against itself.
  const auto perfect = run({"evaluate", seq.string(), (seq / "annotations").string()});
  REQUIRE(perfect.code == kExitOk);
  CHECK(perfect.out.find("1.0000") != std::string::npos);
  CHECK(perfect.out.find("0.0000") == std::string::npos);

  const auto csv = run({"evaluate", seq.string(), (seq / "annotations").string(), "--csv"});
  CHECK(csv.out.rfind("sequence,frames", 0) == 0);
  CHECK(csv.out.find("seq,10,10,0,0,1.0000,1.0000,1.0000,1.0000") != std::string::npos);

  const auto bench = run({"bench", seq.string(), "--frames", "4"});
  CHECK(bench.code == kExitOk);
  CHECK(bench.out.find("fps") != std::string::npos);
}
