#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bluecast/harness/metrics.hpp"
#include "bluecast/harness/pipeline.hpp"

namespace bluecast::harness {

/// x value of a row along one sweep axis; perturbations use their magnitude.
inline std::string axis_value(const MetricsRow& r, const std::string& axis)
{
    std::ostringstream os;
    os.precision(10);
    if (axis == "distance") os << r.distance;
    else if (axis == "angle_deg") os << r.angle_deg;
    else if (axis == "delta") os << r.delta;
    else if (axis == "rs_rate") os << r.rs_rate;
    else if (axis == "perturbation") {
        const auto colon = r.perturbation.find(':');
        os << (colon == std::string::npos ? "0" : r.perturbation.substr(colon + 1));
    }
    return os.str();
}

inline std::string perturbation_kind(const MetricsRow& r)
{
    const auto colon = r.perturbation.find(':');
    return colon == std::string::npos ? "none" : r.perturbation.substr(0, colon);
}

inline const std::vector<std::string>& report_axes()
{
    static const std::vector<std::string> axes{"distance", "angle_deg", "delta", "rs_rate", "perturbation"};
    return axes;
}

/// One plot-data table per sweep axis that varies: columns series, x, fer,
/// ber, goodput_kbps, psnr_db. A series collects rows that agree on every
/// other axis.
inline std::map<std::string, std::string> plot_series(const std::vector<MetricsRow>& rows)
{
    std::map<std::string, std::string> out;
    for (const auto& axis : report_axes()) {
        std::map<std::string, int> distinct;
        for (const auto& r : rows) distinct[axis_value(r, axis)]++;
        if (distinct.size() < 2) continue;
        std::ostringstream f;
        f << "# bluecast-plot v1\nseries,x,fer,ber,goodput_kbps,psnr_db\n";
        f.precision(10);
        for (const auto& r : rows) {
            std::string series;
            for (const auto& other : report_axes()) {
                if (other == axis) continue;
                if (!series.empty()) series += ' ';
                series += other + "=" + axis_value(r, other);
            }
            if (axis == "perturbation") series += " kind=" + perturbation_kind(r);
            f << series << ',' << axis_value(r, axis) << ',' << r.fer << ',' << r.ber << ',' << r.goodput / 1000.0 << ','
              << r.psnr << '\n';
        }
        out["fer_vs_" + axis + ".csv"] = f.str();
    }
    return out;
}

/// Writes the plot-data files for `rows` into `dir`; returns their names.
inline std::vector<std::string> write_report(const std::vector<MetricsRow>& rows, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::string> names;
    for (const auto& [name, text] : plot_series(rows)) {
        write_text(dir / name, text);
        names.push_back(name);
    }
    return names;
}

} // namespace bluecast::harness
