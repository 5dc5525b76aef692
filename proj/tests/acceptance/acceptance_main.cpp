// Runs the acceptance suite twice with the same seed and prints one line per
// criterion. Usage: rough_acceptance [out_dir] [seed] [known_failures]
// where known_failures is a comma list of criterion ids that are reported but
// do not affect the exit code. Exit code 0 iff every other criterion passes.
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include "rough/cli/cli.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rough_young_acceptance";
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 42;
  std::set<int> known;
  if (argc > 3) {
    std::stringstream ss(argv[3]);
    std::string id;
    while (std::getline(ss, id, ',')) known.insert(std::stoi(id));
  }
  fs::remove_all(root);

  rough::cli::AcceptanceOptions first{seed, (root / "run1").string()};
  rough::cli::AcceptanceOptions second{seed, (root / "run2").string()};
  const auto results = rough::cli::run_acceptance(first);
  rough::cli::run_acceptance(second);

  bool all = true;
  for (const auto& r : results) {
    std::printf("%s criterion %2d %-28s %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str());
    all = all && (r.pass || known.count(r.id));
  }
  std::string why;
  const bool same = rough::cli::same_csv_outputs(first.out, second.out, &why);
  std::printf("%s criterion 14 %-28s %s\n", same ? "PASS" : "FAIL", "determinism", why.c_str());
  all = all && (same || known.count(14));
  if (!known.empty()) {
    std::printf("known failures excluded from the exit code:");
    for (int id : known) std::printf(" %d", id);
    std::printf("\n");
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
