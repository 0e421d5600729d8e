// Exercises the installed command-line interface end to end: exit codes,
// subcommand wiring and artifact production. argv[1] is the binary path,
// argv[2] the reference config.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc < 0 ? rc : WEXITSTATUS(rc);
}

void expect(bool ok, const std::string& what) {
  if (!ok) {
    std::fprintf(stderr, "FAIL: %s\n", what.c_str());
    ++failures;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: cli_smoke <binary> <config>\n");
    return 2;
  }
  const std::string bin = argv[1];
  const std::string cfg = argv[2];
  const fs::path dir = fs::temp_directory_path() / "ioncount_cli_smoke";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string out = (dir / "run").string();
  const std::string quiet = " > /dev/null 2>&1";

  expect(run(bin + " run -c " + cfg + " -o " + out + quiet) == 0, "run exits 0");
  expect(fs::exists(fs::path(out) / "manifest.json"), "run writes manifest");

  // Stage-by-stage over the same directory.
  const std::string st = (dir / "staged").string();
  expect(run(bin + " simulate implant -c " + cfg + " -o " + st + quiet) == 0,
         "simulate implant");
  expect(run(bin + " analyze pulses -c " + cfg + " -o " + st + quiet) == 0,
         "analyze pulses");
  expect(run(bin + " simulate pl -c " + cfg + " -o " + st + quiet) == 0,
         "simulate pl");
  expect(run(bin + " analyze pl -c " + cfg + " -o " + st + quiet) == 0,
         "analyze pl");
  expect(run(bin + " simulate hbt -c " + cfg + " -o " + st + quiet) == 0,
         "simulate hbt");
  expect(run(bin + " analyze hbt -c " + cfg + " -o " + st + quiet) == 0,
         "analyze hbt");
  expect(run(bin + " report -c " + cfg + " -o " + st + quiet) == 0, "report");
  expect(fs::exists(fs::path(st) / "table1.txt"), "report writes table1");

  // Config problems exit with code 2.
  const fs::path bad = dir / "bad.ini";
  std::ofstream(bad) << "[beam]\nwarp_factor = 9\n";
  expect(run(bin + " run -c " + bad.string() + " -o " + out + quiet) == 2,
         "unknown key exits 2");
  expect(run(bin + " run -c /no/such/file.ini -o " + out + quiet) == 2,
         "missing config exits 2");

  // A dead beam exhausts the pulse budget; module error, exit 1.
  const fs::path dead = dir / "dead_beam.ini";
  std::ofstream(dead) << "[beam]\nlambda0 = 0\n[plan]\npulse_budget = 20000\n";
  expect(run(bin + " simulate implant -c " + dead.string() + " -o " + out + quiet) == 1,
         "dead beam exits 1");

  // Analysis without inputs is a module error, exit 1.
  const std::string empty = (dir / "empty").string();
  expect(run(bin + " analyze pulses -c " + cfg + " -o " + empty + quiet) == 1,
         "missing inputs exit 1");

  fs::remove_all(dir);
  if (failures) {
    std::fprintf(stderr, "%d cli smoke failure(s)\n", failures);
    return 1;
  }
  std::puts("cli smoke ok");
  return 0;
}
