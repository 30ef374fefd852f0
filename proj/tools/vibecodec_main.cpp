// vibecodec: analysis, basis training, dissimilarity training and a sparse
// synthesis codec for stationary vibrotactile noise, on the command line.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 finished with
// non-convergence warnings.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vibro/dissimilarity.hpp"
#include "vibro/filterbank.hpp"
#include "vibro/intensity.hpp"
#include "vibro/perceptual_space.hpp"
#include "vibro/signal.hpp"
#include "vibro/spectral_basis.hpp"
#include "vibro/synthcodec.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonConvergence = 3;

struct Options {
    double bank_fmin = 10.0;
    double bank_fmax = 1000.0;
    double jnd = 0.17;
    std::string domain = "dB";
    int k = 1;
    std::uint64_t seed = 0;
    double tolerance_db = 0.1;
    int max_iter = 100;
    double rate = 2800.0;
    bool rate_given = false;
    std::string out;
};

vibro::PowerDomain parse_domain(const std::string& name) {
    if (name == "dB" || name == "db") return vibro::PowerDomain::dB;
    if (name == "linear") return vibro::PowerDomain::linear;
    throw std::runtime_error("unknown domain '" + name + "' (use dB or linear)");
}

ordered_json effective_config(const Options& o) {
    ordered_json j;
    j["bank_fmin"] = o.bank_fmin;
    j["bank_fmax"] = o.bank_fmax;
    j["jnd"] = o.jnd;
    j["domain"] = o.domain;
    j["k"] = o.k;
    j["seed"] = o.seed;
    j["tolerance_db"] = o.tolerance_db;
    j["max_iter"] = o.max_iter;
    j["rate"] = o.rate;
    return j;
}

// Reports go to stdout unless --out names a file; artifact-producing
// commands pass their own report destination explicitly.
void emit_report(const ordered_json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_path);
    f << text;
}

bool has_signal_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".wav" || ext == ".f32" || ext == ".raw";
}

// Expand files and directories into a sorted, deduplicated file list.
std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && has_signal_extension(entry.path()))
                    files.push_back(entry.path().string());
        } else if (fs::exists(p)) {
            files.push_back(p.string());
        } else {
            throw std::runtime_error("no such input: " + in);
        }
    }
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    return files;
}

struct LoadedCorpus {
    std::vector<vibro::Signal> signals;  // sorted by label
    std::vector<ordered_json> errors;    // {file, error} per failed input
};

LoadedCorpus load_corpus(const std::vector<std::string>& inputs, const Options& o) {
    LoadedCorpus c;
    for (const auto& file : expand_inputs(inputs)) {
        try {
            std::optional<double> expected;
            const fs::path p(file);
            std::string ext = p.extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
            if (ext != ".wav" || o.rate_given) expected = o.rate;
            c.signals.push_back(vibro::load_signal(file, expected));
        } catch (const std::exception& e) {
            c.errors.push_back(ordered_json{{"file", file}, {"error", e.what()}});
        }
    }
    std::sort(c.signals.begin(), c.signals.end(),
              [](const vibro::Signal& a, const vibro::Signal& b) { return a.label < b.label; });
    for (std::size_t i = 1; i < c.signals.size(); ++i)
        if (c.signals[i].label == c.signals[i - 1].label)
            throw std::runtime_error("duplicate stimulus label: " + c.signals[i].label);
    if (!c.signals.empty()) {
        const double rate = c.signals.front().sample_rate;
        for (const auto& s : c.signals)
            if (s.sample_rate != rate)
                throw std::runtime_error("inputs mix sample rates (" + std::to_string(rate) +
                                         " vs " + std::to_string(s.sample_rate) + " Hz)");
    }
    return c;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

vibro::SpectralBasis load_basis_file(const std::string& path) {
    if (path.empty()) throw std::runtime_error("--basis is required for this command");
    return vibro::basis_from_json(read_text_file(path));
}

// Corpus signals projected onto the basis, resampled to the bank rate first
// when they were recorded at a different one.
std::vector<std::pair<std::string, vibro::PcaScores>> project_corpus(
    const std::vector<vibro::Signal>& signals, const vibro::SpectralBasis& basis,
    const vibro::FilterBank& bank) {
    std::vector<std::pair<std::string, vibro::PcaScores>> scores;
    scores.reserve(signals.size());
    for (const auto& s : signals) {
        const vibro::Signal* use = &s;
        vibro::Signal resampled;
        if (s.sample_rate != bank.sample_rate) {
            resampled = vibro::resample(s, bank.sample_rate);
            use = &resampled;
        }
        scores.emplace_back(s.label, vibro::project(basis, vibro::band_powers(*use, bank, basis.domain)));
    }
    return scores;
}

std::string sanitize_label(const std::string& label) {
    std::string out = label.empty() ? std::string("entry") : label;
    for (char& c : out)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-'))
            c = '_';
    return out;
}

ordered_json split_to_json(const vibro::SplitReport& s) {
    ordered_json j;
    j["r2_mean"] = s.r2_mean;
    j["r2_sd"] = s.r2_sd;
    j["repeats"] = s.repeats;
    j["degenerate_repeats"] = s.degenerate_repeats;
    return j;
}

ordered_json bank_summary(const vibro::FilterBank& bank) {
    ordered_json j;
    j["n_bands"] = bank.size();
    j["f_min"] = bank.f_min;
    j["f_max"] = bank.f_max;
    j["jnd"] = bank.jnd;
    j["sample_rate"] = bank.sample_rate;
    j["centers"] = bank.centers();
    return j;
}

int cmd_analyze(const std::vector<std::string>& inputs, const Options& o) {
    LoadedCorpus corpus = load_corpus(inputs, o);
    ordered_json report;
    report["config"] = effective_config(o);
    ordered_json records = ordered_json::array();
    auto errors = std::move(corpus.errors);
    if (!corpus.signals.empty()) {
        const double rate = corpus.signals.front().sample_rate;
        const auto bank = vibro::design_bank(o.bank_fmin, o.bank_fmax, o.jnd, rate);
        report["bank"] = bank_summary(bank);
        const vibro::IntensityModel unit_model;
        for (const auto& s : corpus.signals) {
            try {
                ordered_json rec;
                rec["label"] = s.label;
                rec["sample_rate"] = s.sample_rate;
                rec["n_samples"] = s.size();
                rec["intensity_band_power"] = vibro::intensity_band_power(s);
                try {
                    rec["non_stationarity_sigma"] = vibro::non_stationarity(s, unit_model).sigma;
                } catch (const std::exception&) {
                    rec["non_stationarity_sigma"] = nullptr;  // too short to window
                }
                rec["band_powers_linear"] = vibro::band_powers(s, bank, vibro::PowerDomain::linear).values;
                rec["band_powers_db"] = vibro::band_powers(s, bank, vibro::PowerDomain::dB).values;
                records.push_back(std::move(rec));
            } catch (const std::exception& e) {
                errors.push_back(ordered_json{{"file", s.label}, {"error", e.what()}});
            }
        }
    }
    report["signals"] = std::move(records);
    report["errors"] = errors;
    emit_report(report, o.out);
    return errors.empty() ? kExitOk : kExitData;
}

int cmd_train_basis(const std::vector<std::string>& inputs, const Options& o, double variance,
                    bool k_given, const std::string& basis_out) {
    if (basis_out.empty()) throw CLI::ValidationError("train-basis", "--out <basis.json> is required");
    LoadedCorpus corpus = load_corpus(inputs, o);
    if (!corpus.errors.empty())
        throw std::runtime_error("unreadable corpus input: " +
                                 corpus.errors.front()["error"].get<std::string>());
    if (corpus.signals.size() < 2) throw std::runtime_error("basis training needs at least 2 signals");

    const double rate = corpus.signals.front().sample_rate;
    const auto bank = vibro::design_bank(o.bank_fmin, o.bank_fmax, o.jnd, rate);
    const auto domain = parse_domain(o.domain);
    std::vector<vibro::BandPowers> powers;
    powers.reserve(corpus.signals.size());
    for (const auto& s : corpus.signals) powers.push_back(vibro::band_powers(s, bank, domain));

    vibro::SpectralBasis basis;
    if (variance > 0.0) {
        if (k_given) throw CLI::ValidationError("train-basis", "--k and --variance are exclusive");
        basis = vibro::fit_basis_variance(powers, variance);
    } else {
        basis = vibro::fit_basis(powers, o.k);
    }

    {
        std::ofstream f(basis_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + basis_out);
        f << vibro::basis_to_json(basis) << "\n";
    }

    ordered_json report;
    report["config"] = effective_config(o);
    report["corpus_size"] = corpus.signals.size();
    report["bank"] = bank_summary(bank);
    report["k"] = basis.k();
    report["eigenvalues"] = basis.eigenvalues;
    report["explained_ratio"] = basis.explained_ratio;
    double cum = 0.0;
    auto& cumulative = report["cumulative_ratio"] = ordered_json::array();
    for (double r : basis.explained_ratio) cumulative.push_back(cum += r);
    report["out"] = basis_out;
    emit_report(report, "");
    return kExitOk;
}

int cmd_encode(const std::vector<std::string>& inputs, const Options& o,
               const std::string& basis_path, const std::string& stream_out) {
    if (stream_out.empty()) throw CLI::ValidationError("encode", "--out <stream.vbc> is required");
    const auto basis = load_basis_file(basis_path);
    const auto bank = vibro::design_bank_like(basis.bank);
    LoadedCorpus corpus = load_corpus(inputs, o);
    if (!corpus.errors.empty())
        throw std::runtime_error("unreadable input: " +
                                 corpus.errors.front()["error"].get<std::string>());
    if (corpus.signals.empty()) throw std::runtime_error("encode needs at least one signal");

    std::vector<vibro::Signal> at_rate;
    at_rate.reserve(corpus.signals.size());
    for (const auto& s : corpus.signals)
        at_rate.push_back(s.sample_rate == bank.sample_rate ? s : vibro::resample(s, bank.sample_rate));

    vibro::CodecStream stream;
    stream.header = vibro::make_header(bank, basis, o.k);
    for (const auto& s : at_rate) stream.entries.push_back(vibro::encode(s, basis, bank, o.k));
    vibro::write_vbc(stream, stream_out);

    const auto stats = vibro::compression_stats(stream, at_rate);
    ordered_json report;
    report["config"] = effective_config(o);
    report["out"] = stream_out;
    report["n_stimuli"] = stream.entries.size();
    report["stats"] = ordered_json::parse(vibro::compression_stats_to_json(stats));
    emit_report(report, "");
    return kExitOk;
}

int cmd_decode(const std::string& stream_path, const Options& o, const std::string& out_dir) {
    if (out_dir.empty()) throw CLI::ValidationError("decode", "--out <directory> is required");
    auto stream = vibro::read_vbc(stream_path);
    std::sort(stream.entries.begin(), stream.entries.end(),
              [](const vibro::EncodedVibration& a, const vibro::EncodedVibration& b) {
                  return a.label < b.label;
              });
    fs::create_directories(out_dir);

    vibro::SynthesisConfig cfg;
    cfg.max_iterations = o.max_iter;
    cfg.tolerance_db = o.tolerance_db;
    cfg.seed = o.seed;
    cfg.sample_rate = stream.header.sample_rate;

    ordered_json report;
    report["config"] = effective_config(o);
    report["stream"] = stream_path;
    auto& entries = report["entries"] = ordered_json::array();
    bool all_converged = true;
    for (const auto& e : stream.entries) {
        auto decoded = vibro::decode(e, stream.header, cfg);
        const std::string wav_path = (fs::path(out_dir) / (sanitize_label(e.label) + ".wav")).string();
        vibro::save_wav(decoded.signal, wav_path);
        ordered_json rec;
        rec["label"] = e.label;
        rec["file"] = wav_path;
        rec["iterations"] = decoded.iterations;
        rec["final_error_db"] = decoded.final_error_db;
        rec["converged"] = decoded.converged;
        entries.push_back(std::move(rec));
        all_converged = all_converged && decoded.converged;
    }
    emit_report(report, "");
    return all_converged ? kExitOk : kExitNonConvergence;
}

int cmd_synth(const Options& o, const std::string& basis_path, double t1, double intensity,
              double duration, const std::string& wav_out) {
    if (wav_out.empty()) throw CLI::ValidationError("synth", "--out <file.wav> is required");
    if (!(intensity >= 0.0)) throw std::runtime_error("--intensity must be nonnegative");
    if (!(duration > 0.0)) throw std::runtime_error("--duration must be positive");
    const auto basis = load_basis_file(basis_path);
    const auto bank = vibro::design_bank_like(basis.bank);

    vibro::PcaScores scores;
    scores.t = Eigen::VectorXd::Zero(basis.k());
    scores.t(0) = t1;
    scores.domain = basis.domain;
    scores.bank = basis.bank;
    scores.basis_k = basis.k();
    auto target = vibro::reconstruct(basis, scores, 1);
    if (target.domain == vibro::PowerDomain::dB) {
        for (auto& v : target.values)
            v = std::max(std::pow(10.0, v / 10.0), vibro::kLinearPowerFloor);
        target.domain = vibro::PowerDomain::linear;
    }

    vibro::SynthesisConfig cfg;
    cfg.max_iterations = o.max_iter;
    cfg.tolerance_db = o.tolerance_db;
    cfg.seed = o.seed;
    cfg.sample_rate = bank.sample_rate;
    cfg.n_samples = static_cast<std::size_t>(std::llround(duration * bank.sample_rate));
    auto result = vibro::impose_band_powers(target, cfg, bank);

    const double gain = intensity > 0.0 ? vibro::equalization_gain(result.signal, intensity) : 0.0;
    for (auto& x : result.signal.samples) x *= gain;
    result.signal.label = "synth";
    vibro::save_wav(result.signal, wav_out);

    ordered_json report;
    report["config"] = effective_config(o);
    report["t1"] = t1;
    report["intensity"] = intensity;
    report["duration"] = duration;
    report["iterations"] = result.iterations;
    report["final_error_db"] = result.final_error_db;
    report["converged"] = result.converged;
    report["out"] = wav_out;
    emit_report(report, "");
    return result.converged ? kExitOk : kExitNonConvergence;
}

int cmd_train_dissim(const std::string& ratings_path, const Options& o,
                     const std::vector<std::string>& corpus_inputs, const std::string& basis_path,
                     const std::string& model_out) {
    if (model_out.empty()) throw CLI::ValidationError("train-dissim", "--out <model.json> is required");
    const auto basis = load_basis_file(basis_path);
    const auto bank = vibro::design_bank_like(basis.bank);
    LoadedCorpus corpus = load_corpus(corpus_inputs, o);
    if (!corpus.errors.empty())
        throw std::runtime_error("unreadable corpus input: " +
                                 corpus.errors.front()["error"].get<std::string>());
    const auto scores = project_corpus(corpus.signals, basis, bank);
    const auto table = vibro::load_ratings_csv(ratings_path);

    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    vibro::build_design(table, scores, false, &X, &y);
    if (X.rows() < 2) throw std::runtime_error("ratings leave fewer than 2 usable pairs");

    vibro::Rng fit_rng(o.seed);
    const int folds = std::min<int>(10, static_cast<int>(X.rows()));
    auto model = vibro::fit_lasso(X, y, {}, folds, fit_rng);
    model.domain = basis.domain;
    model.bank = basis.bank;
    model.basis_k = basis.k();
    {
        std::ofstream f(model_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + model_out);
        f << vibro::dissim_model_to_json(model) << "\n";
    }

    vibro::Rng split_rng(o.seed + 1);
    const auto split = vibro::evaluate_split(X, y, 0.8, 100, split_rng);
    vibro::Rng ablation_rng(o.seed + 2);
    const auto ablation = vibro::component_ablation(X, y, 20, ablation_rng);

    ordered_json report;
    report["config"] = effective_config(o);
    report["n_pairs"] = X.rows();
    report["n_components"] = X.cols();
    report["lambda"] = model.lambda;
    report["intercept"] = model.intercept;
    report["weights"] = std::vector<double>(model.w.data(), model.w.data() + model.w.size());
    report["converged"] = model.converged;
    auto& cv = report["cv"] = ordered_json::array();
    for (const auto& [lambda, mse] : model.cv_report) cv.push_back(ordered_json{{"lambda", lambda}, {"mse", mse}});
    report["split"] = split_to_json(split);
    auto& abl = report["ablation"] = ordered_json::object();
    auto& solo = abl["solo"] = ordered_json::array();
    for (const auto& s : ablation.solo) solo.push_back(split_to_json(s));
    auto& cumulative = abl["cumulative"] = ordered_json::array();
    for (const auto& s : ablation.cumulative) cumulative.push_back(split_to_json(s));
    report["out"] = model_out;
    emit_report(report, "");
    return model.converged ? kExitOk : kExitNonConvergence;
}

int cmd_eval(const Options& o, const std::vector<std::string>& corpus_inputs,
             const std::string& basis_path, const std::string& model_path,
             const std::string& ratings_path, const std::string& ref_path, int dims) {
    const auto basis = load_basis_file(basis_path);
    const auto bank = vibro::design_bank_like(basis.bank);
    if (model_path.empty()) throw std::runtime_error("--model is required for eval");
    const auto model = vibro::dissim_model_from_json(read_text_file(model_path));
    LoadedCorpus corpus = load_corpus(corpus_inputs, o);
    if (!corpus.errors.empty())
        throw std::runtime_error("unreadable corpus input: " +
                                 corpus.errors.front()["error"].get<std::string>());
    const auto scores = project_corpus(corpus.signals, basis, bank);
    const auto n = static_cast<Eigen::Index>(scores.size());
    if (n < 3) throw std::runtime_error("eval needs at least 3 stimuli");

    // Predicted dissimilarities; self-distance is zero by definition and
    // negative predictions are clamped for the embedding.
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    std::size_t clamped = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d = vibro::predict_dissimilarity(model, scores[static_cast<std::size_t>(i)].second,
                                                    scores[static_cast<std::size_t>(j)].second);
            if (d < 0.0) {
                d = 0.0;
                ++clamped;
            }
            D(i, j) = D(j, i) = d;
        }

    auto emb = vibro::classical_mds(vibro::DistanceMatrix(D), dims);
    for (const auto& [label, _] : scores) emb.labels.push_back(label);

    ordered_json report;
    report["config"] = effective_config(o);
    report["labels"] = emb.labels;
    auto& dist = report["distances"] = ordered_json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<std::size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = D(i, j);
        dist.push_back(row);
    }
    report["clamped_pairs"] = clamped;
    report["embedding"] = ordered_json::parse(vibro::embedding_to_json(emb));

    auto& arrows = report["component_arrows"] = ordered_json::array();
    if (dims >= 2) {
        for (int c = 0; c < basis.k(); ++c) {
            std::vector<double> component_scores;
            component_scores.reserve(scores.size());
            for (const auto& [_, sc] : scores) component_scores.push_back(sc.t(c));
            const auto [rx, ry] = vibro::component_arrow(component_scores, emb);
            arrows.push_back(ordered_json{{"component", c + 1}, {"r_axis1", rx}, {"r_axis2", ry}});
        }
    }

    if (!ratings_path.empty()) {
        const auto table = vibro::load_ratings_csv(ratings_path);
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        vibro::build_design(table, scores, false, &X, &y);
        vibro::Rng split_rng(o.seed);
        const auto split = vibro::evaluate_split(X, y, 0.8, 100, split_rng);
        report["split"] = split_to_json(split);
    }

    if (!ref_path.empty()) {
        ordered_json ref = ordered_json::parse(read_text_file(ref_path));
        if (ref.contains("embedding")) ref = ref["embedding"];  // accept a full eval report
        if (!ref.contains("coords") || !ref.contains("labels"))
            throw std::runtime_error("reference embedding needs 'coords' and 'labels'");
        const auto ref_labels = ref["labels"].get<std::vector<std::string>>();
        std::map<std::string, Eigen::Index> pos;
        for (std::size_t i = 0; i < ref_labels.size(); ++i)
            pos[ref_labels[i]] = static_cast<Eigen::Index>(i);
        const auto coords = ref["coords"].get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd target(n, dims);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto it = pos.find(emb.labels[static_cast<std::size_t>(i)]);
            if (it == pos.end())
                throw std::runtime_error("reference embedding is missing stimulus '" +
                                         emb.labels[static_cast<std::size_t>(i)] + "'");
            const auto& row = coords.at(static_cast<std::size_t>(it->second));
            if (static_cast<int>(row.size()) < dims)
                throw std::runtime_error("reference embedding has fewer dimensions than --dims");
            for (int d = 0; d < dims; ++d) target(i, d) = row[static_cast<std::size_t>(d)];
        }
        const auto aligned = vibro::procrustes(target, emb.coords.leftCols(dims));
        report["procrustes"] = ordered_json::parse(vibro::procrustes_to_json(aligned, emb.labels));
    }

    emit_report(report, o.out);
    return kExitOk;
}

// Config file support: a JSON object whose keys mirror the long flags
// (dashes or underscores both accepted). Values become defaults; command-line
// flags override them.
void apply_config_file(const std::string& path, Options& o) {
    const auto j = nlohmann::json::parse(read_text_file(path));
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
    auto norm = [](std::string s) {
        std::replace(s.begin(), s.end(), '-', '_');
        return s;
    };
    for (const auto& [raw_key, value] : j.items()) {
        const std::string key = norm(raw_key);
        if (key == "bank_fmin")
            o.bank_fmin = value.get<double>();
        else if (key == "bank_fmax")
            o.bank_fmax = value.get<double>();
        else if (key == "jnd")
            o.jnd = value.get<double>();
        else if (key == "domain")
            o.domain = value.get<std::string>();
        else if (key == "k")
            o.k = value.get<int>();
        else if (key == "seed")
            o.seed = value.get<std::uint64_t>();
        else if (key == "tolerance_db")
            o.tolerance_db = value.get<double>();
        else if (key == "max_iter")
            o.max_iter = value.get<int>();
        else if (key == "rate") {
            o.rate = value.get<double>();
            o.rate_given = true;
        } else if (key == "out")
            o.out = value.get<std::string>();
        else
            throw std::runtime_error("unknown config key '" + raw_key + "'");
    }
}

// The config file and VIBECODEC_SEED provide defaults, so they are applied
// before CLI11 parses the real flags.
std::optional<std::string> prescan_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    if (const char* env_seed = std::getenv("VIBECODEC_SEED")) {
        try {
            opt.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            std::cerr << "error: VIBECODEC_SEED is not an integer\n";
            return kExitUsage;
        }
    }
    if (const auto config_path = prescan_config_path(argc, argv)) {
        try {
            apply_config_file(*config_path, opt);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitData;
        }
    }

    CLI::App app{"Perceptual analysis and sparse coding of stationary vibrotactile noise"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path_dummy;
    app.add_option("--config", config_path_dummy, "JSON config file mirroring the flags");
    app.add_option("--bank-fmin", opt.bank_fmin, "Filter bank lower edge in Hz");
    app.add_option("--bank-fmax", opt.bank_fmax, "Filter bank upper edge in Hz");
    app.add_option("--jnd", opt.jnd, "Relative band width (frequency JND)");
    app.add_option("--domain", opt.domain, "Power domain: dB or linear");
    app.add_option("--k", opt.k, "Number of basis components");
    app.add_option("--seed", opt.seed, "RNG seed (fallback: VIBECODEC_SEED)");
    app.add_option("--tolerance-db", opt.tolerance_db, "Synthesis tolerance in dB");
    app.add_option("--max-iter", opt.max_iter, "Synthesis iteration budget");
    auto* rate_opt = app.add_option("--rate", opt.rate, "Sample rate for raw inputs and synthesis");
    app.add_option("--out", opt.out, "Output path (report, artifact, or directory)");

    std::vector<std::string> inputs;
    auto* analyze = app.add_subcommand("analyze", "Band powers, intensity and stationarity per signal");
    analyze->add_option("inputs", inputs, "Signal files or directories")->required();

    double variance = 0.0;
    auto* train_basis = app.add_subcommand("train-basis", "Fit the spectral basis on a corpus");
    train_basis->add_option("inputs", inputs, "Corpus files or directories")->required();
    train_basis->add_option("--variance", variance, "Explained-variance target in (0, 1]");

    std::string basis_path;
    auto* encode = app.add_subcommand("encode", "Encode signals into a .vbc stream");
    encode->add_option("inputs", inputs, "Signal files or directories")->required();
    encode->add_option("--basis", basis_path, "Trained basis JSON")->required();

    std::string stream_path;
    auto* decode = app.add_subcommand("decode", "Resynthesize waveforms from a .vbc stream");
    decode->add_option("stream", stream_path, "Encoded .vbc stream")->required();

    double t1 = 0.0, intensity = 0.0, duration = 1.0;
    auto* synth = app.add_subcommand("synth", "Synthesize directly from (intensity, t1)");
    synth->add_option("--t1", t1, "Frequency-balance score")->required();
    synth->add_option("--intensity", intensity, "Target intensity band power")->required();
    synth->add_option("--duration", duration, "Output duration in seconds");
    synth->add_option("--basis", basis_path, "Trained basis JSON")->required();

    std::string ratings_path, model_path, ref_path;
    std::vector<std::string> corpus_inputs;
    auto* train_dissim = app.add_subcommand("train-dissim", "Fit the dissimilarity metric on ratings");
    train_dissim->add_option("ratings", ratings_path, "Ratings CSV (stim_a,stim_b,rating)")->required();
    train_dissim->add_option("--corpus", corpus_inputs, "Stimulus files or directories")->required();
    train_dissim->add_option("--basis", basis_path, "Trained basis JSON")->required();

    int dims = 2;
    auto* eval = app.add_subcommand("eval", "Predicted-dissimilarity MDS and alignment report");
    eval->add_option("--corpus", corpus_inputs, "Stimulus files or directories")->required();
    eval->add_option("--basis", basis_path, "Trained basis JSON")->required();
    eval->add_option("--model", model_path, "Trained dissimilarity model JSON")->required();
    eval->add_option("--ratings", ratings_path, "Optional ratings CSV for a split R^2 report");
    eval->add_option("--ref", ref_path, "Reference embedding JSON to align against");
    eval->add_option("--dims", dims, "Embedding dimensionality");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    opt.rate_given = opt.rate_given || rate_opt->count() > 0;

    try {
        if (*analyze) return cmd_analyze(inputs, opt);
        if (*train_basis)
            return cmd_train_basis(inputs, opt, variance, app.get_option("--k")->count() > 0, opt.out);
        if (*encode) return cmd_encode(inputs, opt, basis_path, opt.out);
        if (*decode) return cmd_decode(stream_path, opt, opt.out);
        if (*synth) return cmd_synth(opt, basis_path, t1, intensity, duration, opt.out);
        if (*train_dissim)
            return cmd_train_dissim(ratings_path, opt, corpus_inputs, basis_path, opt.out);
        if (*eval) return cmd_eval(opt, corpus_inputs, basis_path, model_path, ratings_path, ref_path, dims);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
