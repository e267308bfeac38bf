#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sphenc/envmap.hpp"
#include "sphenc/model.hpp"
#include "sphenc/train.hpp"

namespace sphenc {

// All decoders take a byte span (and throw io_error on malformed input) so
// tests can fuzz them without touching the filesystem; the path-based
// functions are thin wrappers.

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

// Radiance RGBE images: flat and adaptive-RLE scanlines, "-Y h +X w" order.
EnvMap decode_hdr(std::span<const std::uint8_t> bytes);

// Portable FloatMap, color only. Rows are stored bottom to top; the sign of
// the scale field selects the byte order.
EnvMap decode_pfm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pfm(const EnvMap& map);

EnvMap load_envmap(const std::string& path);  // picks the decoder by extension
void save_pfm(const std::string& path, const EnvMap& map);

// Model checkpoints, magic "SPHENC01". Fixed little-endian layout; the loader
// re-derives every array size from the stored configuration and refuses the
// file unless the payload matches exactly, so truncated or corrupt input
// fails cleanly before any allocation.
std::vector<std::uint8_t> encode_checkpoint(const Model<float>& model);
Model<float> decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::string& path, const Model<float>& model);
Model<float> load_checkpoint(const std::string& path);

// Run-report CSV. Fixed column set, doubles printed with %.17g so reruns of
// the same seed produce byte-identical files.
std::string csv_header();
std::string csv_row(const TrainReport& rep);
void write_csv(const std::string& path, std::span<const TrainReport> reports);

}  // namespace sphenc
