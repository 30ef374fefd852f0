#pragma once

#include <map>
#include <string>
#include <vector>

#include "vibro/signal.hpp"

namespace vibro {

// Affine map from 80-200 Hz band power to perceived intensity. The default
// is the unit model (a=1, b=0); cohort-specific coefficients are fitted from
// a gains table and serialized, never hard-coded.
struct IntensityModel {
    double a = 1.0;  // intensity per unit band power
    double b = 0.0;
    double r2 = 1.0;  // coefficient of determination of the fit that produced (a, b)
};

// Spread of predicted intensity over 100 ms windows with 50 ms hop.
struct NonStationarity {
    double sigma = 0.0;
    double window_ms = 100.0;
    double hop_ms = 50.0;
};

struct GainRecord {
    std::string stimulus;
    std::string participant;
    double gain = 0.0;
};

// Ordinary least squares of judgments on band powers. Needs >= 3 points and
// nonconstant powers.
IntensityModel fit_intensity(const std::vector<double>& powers,
                             const std::vector<double>& judgments);

double predict_intensity(const IntensityModel& m, const Signal& s);

// g such that g*s has 80-200 Hz band power equal to ref_power.
double equalization_gain(const Signal& s, double ref_power);

// Population standard deviation of windowed predicted intensity. Signal must
// cover at least 200 ms.
NonStationarity non_stationarity(const Signal& s, const IntensityModel& m);

// CSV with header "stimulus,participant,gain".
std::vector<GainRecord> load_gains_csv(const std::string& path);

// Per-stimulus intensity judgments: geometric mean over participants of
// 1/gain (keyed by stimulus, sorted).
std::map<std::string, double> aggregate_judgments(const std::vector<GainRecord>& records);

std::string intensity_model_to_json(const IntensityModel& m);
IntensityModel intensity_model_from_json(const std::string& text);

}  // namespace vibro
