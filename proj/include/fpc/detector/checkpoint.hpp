#pragma once

#include <string>

#include "fpc/detector/detector.hpp"

namespace fpc {

/// A checkpoint is a directory holding "manifest.txt" and one FPCT file per
/// tensor. The manifest's first lines record the config; every following
/// line is "<name> <file> <d0>x<d1>x...".
void save_checkpoint(const DetectorParams& params, const std::string& dir);

// Throws kCheckpointMismatch on a missing tensor, unexpected tensor, or a
// shape that disagrees with the recorded config.
DetectorParams load_checkpoint(const std::string& dir);

}  // namespace fpc
