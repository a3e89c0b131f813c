// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "icat/datagen.hpp"
#include "icat/iniconfig.hpp"
#include "icat/metrics.hpp"
#include "icat/model.hpp"
#include "icat/train.hpp"

namespace icat {

// Declarative description of one experiment run; parsed from a config file
// by spec_from_ini (schema in docs/experiment-config.md).
struct ExperimentSpec {
  std::string suite;  // static-box | moving-box | decay | mnist | feature-drop
  std::vector<std::string> models;
  std::vector<std::string> datasets;  // box kinds
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "runs/out";
  std::string cache_dir;  // defaults to <output_dir>/cache

  int n_train = 1000;
  int n_test = 300;
  int T = 100;
  int N = 100;
  double amplitude = 1.0;
  std::vector<int> moving_starts = {0, 20, 40, 60, 80};

  int hidden = 64;
  int attn_dim = 50;
  int hops = 10;
  int head_hops = 10;
  int partial_window = 10;

  TrainConfig train;

  int heatmap_count = 4;
  int decay_buckets = 4;
  std::vector<double> drop_grid = {0.0, 10.0, 25.0, 50.0, 100.0};

  std::string mnist_train_images, mnist_train_labels;
  std::string mnist_test_images, mnist_test_labels;
  int mnist_train_cap = 3000;  // deterministic subsample; 0 keeps everything
  int mnist_test_cap = 0;
  int mnist_early_steps = 14;  // "early" window for per-class mass stats
  int mnist_heatmap_digit_class = 2;

  void validate() const;
};

ExperimentSpec spec_from_ini(const IniConfig& cfg);

struct ReportRow {
  std::string suite, dataset, model;
  std::uint64_t seed = 0;
  double wjac = 0.0;
  double euc = 0.0;
  double acc = 0.0;
};

// Results of one suite run. Files land under spec.output_dir; the in-memory
// fields let callers inspect runs without re-reading the CSVs.
struct SuiteOutput {
  std::vector<ReportRow> rows;
  // "<dataset>|<model>|<seed>" -> trained parameters (best test accuracy).
  std::map<std::string, ModelParams<double>> checkpoints;
  // decay suite: model -> per-timestep mean gradient norm over correct samples
  std::map<std::string, std::vector<double>> decay_mean;
  std::map<std::string, bool> decay_empty;
  // mnist suite: model -> median early-time saliency mass of the watched class
  std::map<std::string, double> mnist_early_mass;
  // feature-drop suite: eval model -> source model -> curve
  std::map<std::string, std::map<std::string, DropCurve>> drop_curves;
};

std::string cell_key(const std::string& dataset, const std::string& model, std::uint64_t seed);

SuiteOutput run_static_box(const ExperimentSpec& spec);
SuiteOutput run_moving_box(const ExperimentSpec& spec);
SuiteOutput run_decay(const ExperimentSpec& spec);
SuiteOutput run_mnist(const ExperimentSpec& spec);
SuiteOutput run_feature_drop(const ExperimentSpec& spec);
SuiteOutput run_experiment(const ExperimentSpec& spec);

// Per-sample saliency statistics over correctly classified test samples.
struct SaliencyAggregate {
  int n_correct = 0;
  double wjac_mean = 0.0;
  double euc_mean = 0.0;
  std::vector<double> mean_g;          // mean per-timestep gradient norm
  std::vector<double> mass_per_step;   // aggregate |R| mass per timestep, normalized
};

SaliencyAggregate aggregate_saliency(const ModelParams<double>& model, const LabeledDataset& test,
                                     int workers);

ModelSpec model_spec_for(const std::string& name, const ExperimentSpec& spec, int input_dim,
                         int max_steps, int classes);

// Cached dataset generation keyed by kind, sizes, amplitude, and seed.
DatasetSplit dataset_for(const ExperimentSpec& spec, const std::string& kind_name,
                         int moving_start, std::uint64_t seed);

}  // namespace icat
