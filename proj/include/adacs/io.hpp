#pragma once

#include <string>
#include <vector>

#include "adacs/estimators.hpp"
#include "adacs/grids.hpp"

namespace adacs {

// Binary grid container shared across the repo: magic "ADCS", one kind byte
// (0 image, 1 field, 2 score, 3 mask, 4 checkpoint), two u32 little-endian
// dims, then row-major f64 little-endian payload. Fields store all dx then
// all dy; masks store 0.0/1.0. Checkpoints follow the dims with five u32
// descriptor words (kind, input channels, base width, depth, head) and the
// flat parameter array.

void write_image_grid(const std::string& path, const Image& img);
Image read_image_grid(const std::string& path);

void write_field_grid(const std::string& path, const DisplacementField& field);
DisplacementField read_field_grid(const std::string& path);

void write_score_grid(const std::string& path, const ScoreMap& score);
ScoreMap read_score_grid(const std::string& path);

void write_mask_grid(const std::string& path, const Mask& mask);
Mask read_mask_grid(const std::string& path);

struct Checkpoint {
  EstimatorSpec spec;
  std::vector<double> params;
};

void write_checkpoint(const std::string& path, const EstimatorSpec& spec,
                      const ParamVector& params);
Checkpoint read_checkpoint(const std::string& path);

// PGM raster. P2 (ASCII) and P5 (binary) with maxval 255 or 65535 are read;
// writing always produces P5 maxval 255 with value round(v * 255).
// Parse errors name the byte offset.
Image read_pgm(const std::string& path);
void write_pgm(const Image& img, const std::string& path);
void write_pgm(const ScoreMap& score, const std::string& path);
Mask read_mask_pgm(const std::string& path, double threshold = 0.5);

}  // namespace adacs
