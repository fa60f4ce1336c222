#pragma once

// JSON scan files, transform files and match reports.
//
// Scan file (schema_version 1):
//   {
//     "schema_version": 1,
//     "scan_id": "a",
//     "objects": [
//       {"kind": "line",  "line":  {"direction": [x, y, z], "point": [x, y, z]},
//        "centroid": [x, y, z]},
//       {"kind": "plane", "plane": {"normal": [x, y, z], "d": 1.5}}
//     ]
//   }
// "centroid" is optional. Unknown fields are rejected.
//
// Transform file: {"rotation": [9 numbers, row-major], "translation": [x, y, z]}

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "graff/consistency.hpp"
#include "graff/graff_core.hpp"
#include "graff/rigid_transform.hpp"

namespace graff {

inline constexpr int kScanSchemaVersion = 1;

/// Directions and normals whose norm differs from 1 by more than this are
/// still normalized, but reported.
inline constexpr double kNormWarningTolerance = 1e-3;

/// Malformed document. what() carries the source name and either a
/// line/column (syntax) or a field path (schema).
class FormatError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

struct ScanDocument {
    Scan scan;
    /// One per object when every object carries a centroid, otherwise empty.
    std::vector<Eigen::Vector3d> centroids;
    std::vector<std::string> warnings;
};

/// `origin` names the source in diagnostics.
ScanDocument parse_scan(std::string_view text, std::string_view origin = "<input>");
ScanDocument load_scan(const std::filesystem::path &path);

/// Lines as point-direction (closest point to the origin), planes in
/// canonical Hesse form. `centroids` may be empty.
nlohmann::json scan_to_json(const Scan &scan, const std::vector<Eigen::Vector3d> &centroids = {});

RigidTransform parse_transform(std::string_view text, std::string_view origin = "<input>");
RigidTransform load_transform(const std::filesystem::path &path);
nlohmann::json transform_to_json(const RigidTransform &T);

/// Unit quaternion (w, x, y, z) with w >= 0.
Eigen::Vector4d quaternion_wxyz(const Eigen::Matrix3d &R);

/// Rounds to 12 significant digits; every number written by this library
/// passes through here.
double rounded(double value);

/// Two-space indented JSON with a trailing newline.
std::string dump(const nlohmann::json &doc);

/// Writes `contents` to `path`; throws std::runtime_error on failure.
void write_file(const std::filesystem::path &path, std::string_view contents);

}  // namespace graff
