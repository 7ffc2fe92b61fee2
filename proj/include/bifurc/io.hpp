#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bifurc/dsl.hpp"
#include "bifurc/measures.hpp"
#include "bifurc/scan.hpp"
#include "bifurc/word.hpp"

namespace bifurc {

// Parsed run configuration: the declared family plus the step distribution.
struct Config {
    RepFamily family;
    StepMeasure walk;
    nlohmann::json raw;
};

Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

// header re,im,value,mask; row-major node order; 17 significant digits so
// doubles survive a round trip; masked rows leave the value empty
std::string encode_field_csv(const ScanField& field);
ScanField decode_field_csv(const std::string& csv);

std::string format_double(double v);  // shortest 17-significant-digit form

enum class Colormap { Gray, Heat };
enum class ImageScale { Linear, Log };

// binary P6, max value 255, deterministic bytes; row 0 = top (max im)
std::string encode_field_ppm(const ScanField& field, Colormap map, ImageScale scale);
std::string encode_intensity_ppm(std::size_t width, std::size_t height,
                                 const std::vector<double>& intensity, Colormap map);

std::string sha256_hex(const std::string& bytes);

// cloud CSV: re,im,mult,word_id
std::string encode_cloud_csv(const std::vector<DivisorEntry>& entries);
// point cloud CSV: one row per point, homogeneous coordinates
std::string encode_points_csv(const PointCloud& cloud);

}  // namespace bifurc
