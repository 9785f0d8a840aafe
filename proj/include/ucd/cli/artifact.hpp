#pragma once

#include "ucd/dataio/dataset.hpp"
#include "ucd/models/model.hpp"
#include "ucd/trainer/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ucd {

inline constexpr int kArtifactFormatVersion = 1;

/// A trained model on disk: header, posterior tables, lambda sets and the
/// id maps that give the dense indices their meaning.
struct Artifact {
  int format_version = kArtifactFormatVersion;
  ModelConfig model;
  TrainConfig train;
  DatasetShape shape;
  std::uint64_t split_seed = 0;
  SplitRatios ratios;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  double best_val_acc = 0.0;
  Posterior posterior;
  IdMap students;
  IdMap questions;
  std::vector<std::string> concepts;
};

/// JSON text. Doubles are written with round-trip precision, so a reloaded
/// posterior is bit-identical.
void save_artifact(const Artifact& artifact, const std::filesystem::path& path);
/// Throws DataError on unreadable, malformed or version-mismatched files.
Artifact load_artifact(const std::filesystem::path& path);

}  // namespace ucd
