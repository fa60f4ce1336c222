#include "graff/scan_io.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace graff {

using nlohmann::json;

namespace {

// Schema walker: every error names the field path.
class Reader {
public:
    explicit Reader(std::string_view origin) : origin_(origin) {}

    [[noreturn]] void fail(const std::string &path, const std::string &message) const {
        throw FormatError(fmt::format("{}: {}: {}", origin_, path.empty() ? "<root>" : path,
                                      message));
    }

    const json &field(const json &obj, const std::string &path, const char *key) const {
        const auto it = obj.find(key);
        if (it == obj.end()) {
            fail(path, fmt::format("missing field '{}'", key));
        }
        return *it;
    }

    void only(const json &obj, const std::string &path,
              std::initializer_list<std::string_view> allowed) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        for (const auto &item : obj.items()) {
            bool known = false;
            for (std::string_view key : allowed) {
                known = known || item.key() == key;
            }
            if (!known) {
                fail(path, fmt::format("unexpected field '{}'", item.key()));
            }
        }
    }

    double number(const json &value, const std::string &path) const {
        if (!value.is_number()) {
            fail(path, "expected a number");
        }
        const double x = value.get<double>();
        if (!std::isfinite(x)) {
            fail(path, "value is not finite");
        }
        return x;
    }

    Eigen::Vector3d vec3(const json &value, const std::string &path) const {
        if (!value.is_array() || value.size() != 3) {
            fail(path, "expected an array of 3 numbers");
        }
        Eigen::Vector3d v;
        for (int k = 0; k < 3; ++k) {
            v(k) = number(value[static_cast<std::size_t>(k)], fmt::format("{}[{}]", path, k));
        }
        return v;
    }

    Eigen::Vector3d unit(const json &value, const std::string &path,
                         std::vector<std::string> &warnings) const {
        const Eigen::Vector3d v = vec3(value, path);
        const double norm = v.norm();
        if (!(norm > 1e-12)) {
            fail(path, "vector has zero length");
        }
        if (std::abs(norm - 1.0) > kNormWarningTolerance) {
            warnings.push_back(
                fmt::format("{}: {}: norm {:.6g} normalized to 1", origin_, path, norm));
        }
        return v / norm;
    }

    json parse(std::string_view text) const {
        try {
            return json::parse(text.begin(), text.end());
        } catch (const json::parse_error &e) {
            // Byte offset to line/column.
            const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
            std::size_t line = 1;
            std::size_t column = 1;
            for (std::size_t i = 0; i < pos; ++i) {
                if (text[i] == '\n') {
                    ++line;
                    column = 1;
                } else {
                    ++column;
                }
            }
            std::string detail = e.what();
            if (const auto colon = detail.rfind(": "); colon != std::string::npos) {
                detail = detail.substr(colon + 2);
            }
            throw FormatError(fmt::format("{}:{}:{}: syntax error: {}", origin_, line, column,
                                          detail));
        } catch (const json::out_of_range &e) {
            // Number literals beyond double range.
            throw FormatError(fmt::format("{}: {}", origin_, e.what()));
        }
    }

private:
    std::string origin_;
};

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(fmt::format("{}: cannot open file", path.string()));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json vec_json(const Eigen::Vector3d &v) {
    return json::array({rounded(v.x()), rounded(v.y()), rounded(v.z())});
}

}  // namespace

double rounded(double value) {
    if (value == 0.0) {
        return 0.0;  // drops the sign of -0
    }
    if (!std::isfinite(value)) {
        return value;
    }
    return std::stod(fmt::format("{:.12g}", value));
}

std::string dump(const json &doc) { return doc.dump(2) + "\n"; }

void write_file(const std::filesystem::path &path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("{}: cannot open for writing", path.string()));
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw std::runtime_error(fmt::format("{}: write failed", path.string()));
    }
}

ScanDocument parse_scan(std::string_view text, std::string_view origin) {
    const Reader r(origin);
    const json doc = r.parse(text);
    r.only(doc, "", {"schema_version", "scan_id", "objects"});

    const json &version = r.field(doc, "", "schema_version");
    if (!version.is_number_integer() || version.get<long long>() != kScanSchemaVersion) {
        r.fail("schema_version", fmt::format("expected {}", kScanSchemaVersion));
    }
    const json &id = r.field(doc, "", "scan_id");
    if (!id.is_string()) {
        r.fail("scan_id", "expected a string");
    }
    const json &objects = r.field(doc, "", "objects");
    if (!objects.is_array()) {
        r.fail("objects", "expected an array");
    }

    ScanDocument out;
    out.scan.id = id.get<std::string>();
    std::vector<Eigen::Vector3d> centroids;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string path = fmt::format("objects[{}]", i);
        const json &obj = objects[i];
        if (!obj.is_object()) {
            r.fail(path, "expected an object");
        }
        const json &kind = r.field(obj, path, "kind");
        if (!kind.is_string()) {
            r.fail(path + ".kind", "expected a string");
        }
        const std::string k = kind.get<std::string>();
        if (k == "line") {
            r.only(obj, path, {"kind", "line", "centroid"});
            const std::string lp = path + ".line";
            const json &line = r.field(obj, path, "line");
            r.only(line, lp, {"direction", "point"});
            const Eigen::Vector3d a =
                r.unit(r.field(line, lp, "direction"), lp + ".direction", out.warnings);
            const Eigen::Vector3d p = r.vec3(r.field(line, lp, "point"), lp + ".point");
            out.scan.objects.push_back(from_pd(LinePD{a, p}));
        } else if (k == "plane") {
            r.only(obj, path, {"kind", "plane", "centroid"});
            const std::string pp = path + ".plane";
            const json &plane = r.field(obj, path, "plane");
            r.only(plane, pp, {"normal", "d"});
            const Eigen::Vector3d n =
                r.unit(r.field(plane, pp, "normal"), pp + ".normal", out.warnings);
            const double d = r.number(r.field(plane, pp, "d"), pp + ".d");
            out.scan.objects.push_back(from_hesse(PlaneHesse{n, d}));
        } else {
            r.fail(path + ".kind", fmt::format("unknown kind '{}'", k));
        }
        if (const auto it = obj.find("centroid"); it != obj.end()) {
            centroids.push_back(r.vec3(*it, path + ".centroid"));
        }
    }
    if (centroids.size() == out.scan.size()) {
        out.centroids = std::move(centroids);
    } else if (!centroids.empty()) {
        out.warnings.push_back(fmt::format(
            "{}: only {} of {} objects have a centroid; centroids ignored", origin,
            centroids.size(), out.scan.size()));
    }
    return out;
}

ScanDocument load_scan(const std::filesystem::path &path) {
    return parse_scan(read_file(path), path.string());
}

json scan_to_json(const Scan &scan, const std::vector<Eigen::Vector3d> &centroids) {
    if (!centroids.empty() && centroids.size() != scan.size()) {
        throw InvalidInput("centroid count does not match object count");
    }
    json objects = json::array();
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const GraffElement &el = scan.objects[i];
        json obj;
        if (el.is_line()) {
            const LinePD l = to_pd(el);
            obj["kind"] = "line";
            obj["line"] = {{"direction", vec_json(l.a)}, {"point", vec_json(l.p)}};
        } else {
            const PlaneHesse h = to_hesse(el);
            obj["kind"] = "plane";
            obj["plane"] = {{"normal", vec_json(h.n)}, {"d", rounded(h.d)}};
        }
        if (!centroids.empty()) {
            obj["centroid"] = vec_json(centroids[i]);
        }
        objects.push_back(std::move(obj));
    }
    return {{"schema_version", kScanSchemaVersion}, {"scan_id", scan.id}, {"objects", objects}};
}

RigidTransform parse_transform(std::string_view text, std::string_view origin) {
    const Reader r(origin);
    const json doc = r.parse(text);
    r.only(doc, "", {"rotation", "translation"});
    const json &rot = r.field(doc, "", "rotation");
    if (!rot.is_array() || rot.size() != 9) {
        r.fail("rotation", "expected an array of 9 numbers (row-major)");
    }
    RigidTransform T;
    for (int k = 0; k < 9; ++k) {
        T.R(k / 3, k % 3) = r.number(rot[static_cast<std::size_t>(k)], fmt::format("rotation[{}]", k));
    }
    const double orth = (T.R.transpose() * T.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (orth > 1e-6 || T.R.determinant() < 0.0) {
        r.fail("rotation", "not a proper rotation");
    }
    T.t = r.vec3(r.field(doc, "", "translation"), "translation");
    return T;
}

RigidTransform load_transform(const std::filesystem::path &path) {
    return parse_transform(read_file(path), path.string());
}

json transform_to_json(const RigidTransform &T) {
    json rot = json::array();
    for (int k = 0; k < 9; ++k) {
        rot.push_back(rounded(T.R(k / 3, k % 3)));
    }
    return {{"rotation", rot}, {"translation", vec_json(T.t)}};
}

Eigen::Vector4d quaternion_wxyz(const Eigen::Matrix3d &R) {
    Eigen::Quaterniond q(R);
    q.normalize();
    Eigen::Vector4d out(q.w(), q.x(), q.y(), q.z());
    if (out(0) < 0.0) {
        out = -out;
    }
    return out;
}

}  // namespace graff
