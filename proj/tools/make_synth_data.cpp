// Writes the synthetic stand-in datasets (IDX digit files, CIFAR-style
// binary batches) so the pipelines can run end to end on machines that do
// not have the benchmark datasets on disk.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "screenprune/datagen.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate synthetic stand-in datasets in IDX / CIFAR binary formats"};
  std::string kind = "digits";
  std::string out_dir = "data/synth";
  std::size_t train_count = 12000, test_count = 2000;
  std::uint64_t seed = 1;
  app.add_option("--kind", kind, "digits (IDX files) or rgb (CIFAR binary batches)")
      ->check(CLI::IsMember({"digits", "rgb"}));
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--train", train_count, "training sample count");
  app.add_option("--test", test_count, "test sample count");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    if (kind == "digits")
      screenprune::write_synth_digit_dataset(out_dir, train_count, test_count, seed);
    else
      screenprune::write_synth_rgb_dataset(out_dir, train_count, test_count, seed);
    std::cout << "wrote " << kind << " dataset (" << train_count << " train / " << test_count
              << " test) to " << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
