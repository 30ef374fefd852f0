#include "vibro/intensity.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "vibro/filterbank.hpp"

namespace vibro {

IntensityModel fit_intensity(const std::vector<double>& powers,
                             const std::vector<double>& judgments) {
    if (powers.size() != judgments.size())
        throw std::invalid_argument("fit_intensity: length mismatch");
    if (powers.size() < 3) throw std::invalid_argument("fit_intensity: need at least 3 points");
    const double n = static_cast<double>(powers.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        mx += powers[i];
        my += judgments[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        sxx += (powers[i] - mx) * (powers[i] - mx);
        sxy += (powers[i] - mx) * (judgments[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_intensity: constant powers (degenerate design)");
    IntensityModel m;
    m.a = sxy / sxx;
    m.b = my - m.a * mx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        const double e = judgments[i] - (m.a * powers[i] + m.b);
        ss_res += e * e;
        ss_tot += (judgments[i] - my) * (judgments[i] - my);
    }
    m.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return m;
}

double predict_intensity(const IntensityModel& m, const Signal& s) {
    return m.a * intensity_band_power(s) + m.b;
}

double equalization_gain(const Signal& s, double ref_power) {
    if (ref_power < 0.0) throw std::invalid_argument("equalization_gain: negative reference power");
    const double p = intensity_band_power(s);
    if (p <= 0.0) throw std::invalid_argument("equalization_gain: signal has zero 80-200 Hz power");
    return std::sqrt(ref_power / p);
}

NonStationarity non_stationarity(const Signal& s, const IntensityModel& m) {
    NonStationarity ns;
    if (s.duration() < 0.2 - 1e-12)
        throw std::invalid_argument("non_stationarity: signal must cover at least 200 ms");
    const auto wins = windows(s, ns.window_ms, ns.hop_ms);
    std::vector<double> vals;
    vals.reserve(wins.size());
    for (const auto& w : wins) vals.push_back(predict_intensity(m, w));
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vals.size());  // population variance: this is a metric, not an estimator
    ns.sigma = std::sqrt(var);
    return ns;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t i = 0;
        while (i < field.size() && field[i] == ' ') ++i;
        out.push_back(field.substr(i));
    }
    return out;
}

}  // namespace

std::vector<GainRecord> load_gains_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty gains file: " + path);
    const auto header = split_csv_line(line);
    if (header.size() != 3 || header[0] != "stimulus" || header[1] != "participant" ||
        header[2] != "gain")
        throw std::runtime_error("gains CSV must have header stimulus,participant,gain: " + path);
    std::vector<GainRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        GainRecord r;
        r.stimulus = fields[0];
        r.participant = fields[1];
        try {
            r.gain = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad gain value");
        }
        if (!(r.gain > 0.0))
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": gain must be positive");
        records.push_back(std::move(r));
    }
    return records;
}

std::map<std::string, double> aggregate_judgments(const std::vector<GainRecord>& records) {
    std::map<std::string, std::pair<double, int>> acc;  // sum of log(1/gain), count
    for (const auto& r : records) {
        auto& slot = acc[r.stimulus];
        slot.first += std::log(1.0 / r.gain);
        slot.second += 1;
    }
    std::map<std::string, double> out;
    for (const auto& [stim, slot] : acc) out[stim] = std::exp(slot.first / slot.second);
    return out;
}

std::string intensity_model_to_json(const IntensityModel& m) {
    nlohmann::ordered_json j;
    j["a"] = m.a;
    j["b"] = m.b;
    j["r2"] = m.r2;
    return j.dump(2);
}

IntensityModel intensity_model_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    IntensityModel m;
    m.a = j.at("a").get<double>();
    m.b = j.at("b").get<double>();
    m.r2 = j.value("r2", 1.0);
    if (!(m.a > 0.0)) throw std::runtime_error("intensity model: slope must be positive");
    return m;
}

}  // namespace vibro
