#include "fwmcat/io.hpp"

#include <openssl/sha.h>

#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "fwmcat/errors.hpp"

namespace fwmcat {

using nlohmann::json;

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // no "-0"
    return buf;
}

std::string content_hash(const std::string& text) {
    const std::string blob = "blob " + std::to_string(text.size()) + '\0' + text;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char b : digest) {
        out += hex[b >> 4];
        out += hex[b & 15];
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << text;
    if (!os) throw ConfigError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

namespace {

json meta_json(const StateMeta& meta) {
    return {{"tau", meta.tau}, {"config_hash", meta.config_hash}, {"picture", meta.picture}};
}

json space_json(const FockSpace& space) {
    json s;
    s["max_occ"] = space.max_occ();
    s["total_cap"] = space.total_cap() ? json(*space.total_cap()) : json(nullptr);
    return s;
}

FockSpacePtr space_from(const json& s) {
    if (!s.is_object() || !s.contains("max_occ")) throw ConfigError("state file: missing space.max_occ");
    std::optional<int> cap;
    if (s.contains("total_cap") && !s["total_cap"].is_null()) cap = s["total_cap"].get<int>();
    return build_space(s["max_occ"].get<std::vector<int>>(), cap);
}

}  // namespace

void write_state(const std::filesystem::path& path, const PureState& psi, const StateMeta& meta) {
    json doc = meta_json(meta);
    doc["format"] = "fwmcat-state";
    doc["kind"] = "pure";
    doc["space"] = space_json(*psi.space);
    json amps = json::array();
    for (Eigen::Index i = 0; i < psi.amplitudes.size(); ++i) {
        const cplx a = psi.amplitudes[i];
        if (a != cplx{}) amps.push_back({i, a.real(), a.imag()});
    }
    doc["amplitudes"] = std::move(amps);
    write_text(path, doc.dump(1) + "\n");
}

void write_state(const std::filesystem::path& path, const DensityMatrix& rho, const StateMeta& meta) {
    json doc = meta_json(meta);
    doc["format"] = "fwmcat-state";
    doc["kind"] = "density";
    if (rho.space) {
        doc["space"] = space_json(*rho.space);
    } else {
        doc["modes"] = rho.modes;
        doc["dims"] = rho.local_dims;
    }
    json entries = json::array();
    for (Eigen::Index c = 0; c < rho.matrix.cols(); ++c) {
        for (Eigen::Index r = 0; r < rho.matrix.rows(); ++r) {
            const cplx v = rho.matrix(r, c);
            if (v != cplx{}) entries.push_back({r, c, v.real(), v.imag()});
        }
    }
    doc["entries"] = std::move(entries);
    write_text(path, doc.dump(1) + "\n");
}

StateFile read_state(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("state file " + path.string() + ": " + e.what());
    }
    try {
        if (doc.value("format", "") != "fwmcat-state") throw ConfigError("state file: format must be \"fwmcat-state\"");
        StateFile file;
        file.meta.tau = doc.value("tau", 0.0);
        file.meta.config_hash = doc.value("config_hash", "");
        file.meta.picture = doc.value("picture", "raw");
        const std::string kind = doc.value("kind", "");
        if (kind == "pure") {
            auto space = space_from(doc.at("space"));
            PureState psi{space, VectorC::Zero(static_cast<Eigen::Index>(space->dimension())), 0.0};
            for (const auto& e : doc.at("amplitudes")) {
                const auto i = e.at(0).get<std::size_t>();
                if (i >= space->dimension()) throw ConfigError("state file: amplitude index out of range");
                psi.amplitudes[static_cast<Eigen::Index>(i)] = cplx(e.at(1).get<double>(), e.at(2).get<double>());
            }
            file.pure = std::move(psi);
        } else if (kind == "density") {
            DensityMatrix rho;
            std::size_t dim = 0;
            if (doc.contains("space")) {
                rho.space = space_from(doc["space"]);
                dim = rho.space->dimension();
                rho.modes.resize(rho.space->mode_count());
                for (std::size_t j = 0; j < rho.modes.size(); ++j) rho.modes[j] = j;
            } else {
                rho.modes = doc.at("modes").get<std::vector<std::size_t>>();
                rho.local_dims = doc.at("dims").get<std::vector<std::size_t>>();
                if (rho.modes.size() != rho.local_dims.size() || rho.modes.empty()) {
                    throw ConfigError("state file: modes and dims must be non-empty and of equal length");
                }
                dim = 1;
                for (auto d : rho.local_dims) dim *= d;
            }
            const auto d = static_cast<Eigen::Index>(dim);
            rho.matrix = MatrixC::Zero(d, d);
            for (const auto& e : doc.at("entries")) {
                const auto r = e.at(0).get<Eigen::Index>(), c = e.at(1).get<Eigen::Index>();
                if (r < 0 || c < 0 || r >= d || c >= d) throw ConfigError("state file: entry index out of range");
                rho.matrix(r, c) = cplx(e.at(2).get<double>(), e.at(3).get<double>());
            }
            rho.label = doc.value("picture", "raw");
            file.density = std::move(rho);
        } else {
            throw ConfigError("state file: kind must be \"pure\" or \"density\"");
        }
        return file;
    } catch (const json::exception& e) {
        throw ConfigError("state file " + path.string() + ": " + e.what());
    }
}

DensityMatrix single_mode_from(const StateFile& file, std::size_t mode) {
    if (file.pure) {
        if (mode >= file.pure->space->mode_count()) throw ConfigError("mode out of range");
        return partial_trace(*file.pure, {mode});
    }
    const DensityMatrix& rho = *file.density;
    if (rho.space) {
        if (mode >= rho.space->mode_count()) throw ConfigError("mode out of range");
        return partial_trace(rho, {mode});
    }
    if (rho.modes.size() == 1) {
        if (rho.modes[0] != mode) {
            throw ConfigError("state file holds mode " + std::to_string(rho.modes[0] + 1) + ", not mode " +
                              std::to_string(mode + 1));
        }
        return rho;
    }
    throw ConfigError("state file holds a multi-mode reduced matrix; single-mode extraction unsupported");
}

std::string format_wigner_grid(const WignerGrid& grid, const std::vector<std::string>& header) {
    std::string out;
    for (const auto& line : header) out += "# " + line + "\n";
    if (!grid.label.empty()) out += "# label " + grid.label + "\n";
    out += "# normalization " + format_g9(grid.normalization) + "\n";
    if (!grid.warning.empty()) out += "# warning " + grid.warning + "\n";
    out += "# x p w\n";
    for (std::size_t i = 0; i < grid.spec.x_count; ++i) {
        const std::string xs = format_g9(grid.spec.x(i));
        for (std::size_t j = 0; j < grid.spec.p_count; ++j) {
            out += xs;
            out += ' ';
            out += format_g9(grid.spec.p(j));
            out += ' ';
            out += format_g9(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            out += '\n';
        }
    }
    return out;
}

void write_wigner_grid(const std::filesystem::path& path, const WignerGrid& grid,
                       const std::vector<std::string>& header) {
    write_text(path, format_wigner_grid(grid, header));
}

}  // namespace fwmcat
