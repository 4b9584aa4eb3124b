#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluecast/proto/frame.hpp"

namespace bluecast::harness {

/// Data frames per second: one Manchester pair per two display frames.
inline double pair_rate(double display_rate) { return 0.5 * display_rate; }

/// Goodput in bits/s: useful payload bits (cells minus parity minus the
/// 10 sequence/checksum bits) per pair, times the pair rate, times (1 - FER).
inline double compute_goodput(const proto::FrameLayout& layout, double display_rate, double fer)
{
    if (fer < 0 || fer > 1) throw std::invalid_argument("FER must lie in [0, 1]");
    return static_cast<double>(layout.data_bits()) * pair_rate(display_rate) * (1 - fer);
}

/// Bits recovered after RS correction (payload, sequence and checksum).
inline double compute_throughput(const proto::FrameLayout& layout, double display_rate, double fer)
{
    if (fer < 0 || fer > 1) throw std::invalid_argument("FER must lie in [0, 1]");
    return static_cast<double>(layout.message_bits()) * pair_rate(display_rate) * (1 - fer);
}

/// Correctly received channel bits per second before error correction.
inline double compute_raw_throughput(const proto::FrameLayout& layout, double display_rate, double ber)
{
    if (ber < 0 || ber > 1) throw std::invalid_argument("BER must lie in [0, 1]");
    return static_cast<double>(layout.cells()) * pair_rate(display_rate) * (1 - ber);
}

struct MetricsRow {
    std::string label;
    double distance = 0;
    double angle_deg = 0;
    std::string delta;
    double rs_rate = 0;
    std::string perturbation;
    std::size_t frames_sent = 0;
    std::size_t frames_delivered = 0;
    std::size_t corrupted = 0; ///< delivered payloads that differ from what was sent
    std::size_t decoder_calls = 0;
    double fer = 1;
    double ber = 0.5;
    double goodput = 0;
    double throughput = 0;
    double raw_throughput = 0;
    double psnr = 0;
    double iou = 0;
    double ioc = 0;
    std::string error;
};

inline constexpr const char* kMetricsHeader = "# bluecast-metrics v1";
inline constexpr const char* kMetricsColumns = "label,distance,angle_deg,delta,rs_rate,perturbation,frames_sent,frames_delivered,"
                                               "corrupted,decoder_calls,fer,ber,goodput_bps,throughput_bps,raw_throughput_bps,"
                                               "psnr_db,iou,ioc,error";

inline std::string metrics_csv(const std::vector<MetricsRow>& rows)
{
    std::ostringstream f;
    f << kMetricsHeader << '\n' << kMetricsColumns << '\n';
    f.precision(10);
    for (const auto& r : rows) {
        std::string err = r.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ';';
        f << r.label << ',' << r.distance << ',' << r.angle_deg << ',' << r.delta << ',' << r.rs_rate << ',' << r.perturbation
          << ',' << r.frames_sent << ',' << r.frames_delivered << ',' << r.corrupted << ',' << r.decoder_calls << ',' << r.fer
          << ',' << r.ber << ',' << r.goodput << ',' << r.throughput << ',' << r.raw_throughput << ',' << r.psnr << ','
          << r.iou << ',' << r.ioc << ',' << err << '\n';
    }
    return f.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(f, line) || line != kMetricsHeader) throw std::runtime_error(path.string() + ": not a bluecast metrics v1 file");
    if (!std::getline(f, line) || line != kMetricsColumns) throw std::runtime_error(path.string() + ": unexpected columns");
    std::vector<MetricsRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        if (c.size() != 19) throw std::runtime_error(path.string() + ": malformed row");
        MetricsRow r;
        r.label = c[0];
        r.distance = std::stod(c[1]);
        r.angle_deg = std::stod(c[2]);
        r.delta = c[3];
        r.rs_rate = std::stod(c[4]);
        r.perturbation = c[5];
        r.frames_sent = std::stoul(c[6]);
        r.frames_delivered = std::stoul(c[7]);
        r.corrupted = std::stoul(c[8]);
        r.decoder_calls = std::stoul(c[9]);
        r.fer = std::stod(c[10]);
        r.ber = std::stod(c[11]);
        r.goodput = std::stod(c[12]);
        r.throughput = std::stod(c[13]);
        r.raw_throughput = std::stod(c[14]);
        r.psnr = std::stod(c[15]);
        r.iou = std::stod(c[16]);
        r.ioc = std::stod(c[17]);
        r.error = c[18];
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace bluecast::harness
