#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "popsynth/errors.hpp"
#include "popsynth/rng.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

/// Integer age range [lo, hi] drawn uniformly when the band is selected.
struct AgeBand {
    int lo = 0;
    int hi = 0;
    double prob = 0.0;
};

/// Generative process standing in for a proprietary survey: age is a mixture
/// of uniform integer bands, sex is independent, and the two categorical
/// attributes are drawn from conditional tables indexed by (sex, age band).
/// Every marginal is analytically computable (true_marginals).
struct SurrogateProfile {
    std::vector<AgeBand> age_bands;
    int age_min = 5;
    int age_max = 95;
    std::vector<std::string> sex_labels;
    std::vector<double> sex_probs;
    std::vector<std::string> permit_labels;
    std::vector<std::string> statut_labels;
    // permit_given[sex][band] and statut_given[sex][band] are probability rows.
    std::vector<std::vector<std::vector<double>>> permit_given;
    std::vector<std::vector<std::vector<double>>> statut_given;

    void validate() const {
        require(!age_bands.empty(), ErrorCode::BadConfig, "profile needs age bands");
        double band_total = 0.0;
        for (const auto& band : age_bands) {
            require(band.lo <= band.hi && band.lo >= age_min && band.hi <= age_max,
                    ErrorCode::BadConfig, "age band outside [age_min, age_max]");
            require(band.prob >= 0.0, ErrorCode::BadConfig, "negative band probability");
            band_total += band.prob;
        }
        require(std::abs(band_total - 1.0) < 1e-9, ErrorCode::BadConfig,
                "age band probabilities must sum to 1");
        require(sex_labels.size() == 2 && sex_probs.size() == 2, ErrorCode::BadConfig,
                "profile needs exactly 2 sexes");
        require(std::abs(sex_probs[0] + sex_probs[1] - 1.0) < 1e-9, ErrorCode::BadConfig,
                "sex probabilities must sum to 1");
        check_tables(permit_given, permit_labels.size(), "permit");
        check_tables(statut_given, statut_labels.size(), "statut");
    }

private:
    void check_tables(const std::vector<std::vector<std::vector<double>>>& tables,
                      std::size_t width, const char* what) const {
        require(tables.size() == 2, ErrorCode::BadConfig,
                std::string(what) + " table needs one block per sex");
        for (const auto& per_sex : tables) {
            require(per_sex.size() == age_bands.size(), ErrorCode::BadConfig,
                    std::string(what) + " table needs one row per age band");
            for (const auto& row : per_sex) {
                require(row.size() == width, ErrorCode::BadConfig,
                        std::string(what) + " table row width mismatch");
                double total = 0.0;
                for (double p : row) {
                    require(p >= 0.0, ErrorCode::BadConfig, "negative conditional probability");
                    total += p;
                }
                require(std::abs(total - 1.0) < 1e-9, ErrorCode::BadConfig,
                        std::string(what) + " conditional row must sum to 1");
            }
        }
    }
};

/// Ships with the library; marginals chosen so no attribute is uniform.
inline SurrogateProfile default_surrogate_profile() {
    SurrogateProfile p;
    p.age_bands = {{5, 17, 0.20}, {18, 64, 0.60}, {65, 95, 0.20}};
    p.age_min = 5;
    p.age_max = 95;
    p.sex_labels = {"Male", "Female"};
    p.sex_probs = {0.5, 0.5};
    p.permit_labels = {"NoPermit", "Regular", "Probationary"};
    p.statut_labels = {"Worker", "Student", "Retired", "Other"};
    p.permit_given = {
        {{0.90, 0.02, 0.08}, {0.15, 0.75, 0.10}, {0.30, 0.68, 0.02}},   // Male
        {{0.92, 0.02, 0.06}, {0.25, 0.65, 0.10}, {0.45, 0.53, 0.02}},   // Female
    };
    p.statut_given = {
        {{0.05, 0.90, 0.00, 0.05}, {0.70, 0.12, 0.03, 0.15}, {0.10, 0.01, 0.80, 0.09}},
        {{0.04, 0.91, 0.00, 0.05}, {0.62, 0.14, 0.04, 0.20}, {0.08, 0.01, 0.82, 0.09}},
    };
    p.validate();
    return p;
}

inline SurveySchema surrogate_schema(const SurrogateProfile& profile) {
    SurveySchema schema;
    ColumnSpec age;
    age.name = "P_AGE";
    age.kind = ColumnKind::numeric;
    age.numeric_min = profile.age_min;
    age.numeric_max = profile.age_max;
    age.integer_valued = true;
    schema.columns.push_back(age);

    ColumnSpec sex;
    sex.name = "P_SEX";
    sex.kind = ColumnKind::binary;
    sex.categories = profile.sex_labels;
    schema.columns.push_back(sex);

    ColumnSpec permit;
    permit.name = "PERMIT";
    permit.kind = ColumnKind::categorical;
    permit.categories = profile.permit_labels;
    schema.columns.push_back(permit);

    ColumnSpec statut;
    statut.name = "P_STATUT";
    statut.kind = ColumnKind::categorical;
    statut.categories = profile.statut_labels;
    schema.columns.push_back(statut);

    schema.validate();
    return schema;
}

/// Draws n records; pure function of (n, seed, profile).
inline SurveyTable generate_surrogate(std::size_t n, std::uint64_t seed,
                                      const SurrogateProfile& profile) {
    profile.validate();
    SurveyTable table(surrogate_schema(profile));
    CounterRng rng(derive_seed(seed, fnv1a64("surrogate")));
    std::vector<double> band_probs;
    for (const auto& band : profile.age_bands) band_probs.push_back(band.prob);

    std::vector<double> row(4);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t band_idx = rng.next_categorical(band_probs);
        const AgeBand& band = profile.age_bands[band_idx];
        const int age = band.lo + static_cast<int>(rng.next_below(
                                      static_cast<std::uint64_t>(band.hi - band.lo + 1)));
        const std::size_t sex = rng.next_categorical(profile.sex_probs);
        const std::size_t permit = rng.next_categorical(profile.permit_given[sex][band_idx]);
        const std::size_t statut = rng.next_categorical(profile.statut_given[sex][band_idx]);
        row[0] = static_cast<double>(age);
        row[1] = static_cast<double>(sex);
        row[2] = static_cast<double>(permit);
        row[3] = static_cast<double>(statut);
        table.append_row(row);
    }
    return table;
}

/// Exact per-column marginal distributions of the surrogate process. The
/// numeric age column is reported over `numeric_bins` equal-width bins
/// (matching eval_vector); categorical columns sum the (sex, band)
/// factorization.
inline std::vector<std::vector<double>> true_marginals(const SurrogateProfile& profile,
                                                       std::size_t numeric_bins = 10) {
    profile.validate();

    std::vector<double> age_binned(numeric_bins, 0.0);
    for (int a = profile.age_min; a <= profile.age_max; ++a) {
        double pmf = 0.0;
        for (const auto& band : profile.age_bands)
            if (a >= band.lo && a <= band.hi)
                pmf += band.prob / static_cast<double>(band.hi - band.lo + 1);
        age_binned[numeric_bin(a, profile.age_min, profile.age_max, numeric_bins)] += pmf;
    }

    std::vector<double> permit(profile.permit_labels.size(), 0.0);
    std::vector<double> statut(profile.statut_labels.size(), 0.0);
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t b = 0; b < profile.age_bands.size(); ++b) {
            const double w = profile.sex_probs[s] * profile.age_bands[b].prob;
            for (std::size_t k = 0; k < permit.size(); ++k)
                permit[k] += w * profile.permit_given[s][b][k];
            for (std::size_t k = 0; k < statut.size(); ++k)
                statut[k] += w * profile.statut_given[s][b][k];
        }
    }

    return {age_binned, profile.sex_probs, permit, statut};
}

inline nlohmann::json profile_to_json(const SurrogateProfile& p) {
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : p.age_bands)
        bands.push_back({{"lo", b.lo}, {"hi", b.hi}, {"prob", b.prob}});
    return nlohmann::json{
        {"age_bands", std::move(bands)},
        {"age_min", p.age_min},
        {"age_max", p.age_max},
        {"sex_labels", p.sex_labels},
        {"sex_probs", p.sex_probs},
        {"permit_labels", p.permit_labels},
        {"statut_labels", p.statut_labels},
        {"permit_given", p.permit_given},
        {"statut_given", p.statut_given},
    };
}

inline SurrogateProfile profile_from_json(const nlohmann::json& j) {
    SurrogateProfile p;
    try {
        for (const auto& b : j.at("age_bands"))
            p.age_bands.push_back(
                {b.at("lo").get<int>(), b.at("hi").get<int>(), b.at("prob").get<double>()});
        p.age_min = j.at("age_min").get<int>();
        p.age_max = j.at("age_max").get<int>();
        p.sex_labels = j.at("sex_labels").get<std::vector<std::string>>();
        p.sex_probs = j.at("sex_probs").get<std::vector<double>>();
        p.permit_labels = j.at("permit_labels").get<std::vector<std::string>>();
        p.statut_labels = j.at("statut_labels").get<std::vector<std::string>>();
        p.permit_given = j.at("permit_given").get<std::vector<std::vector<std::vector<double>>>>();
        p.statut_given = j.at("statut_given").get<std::vector<std::vector<std::vector<double>>>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, std::string("bad profile JSON: ") + e.what());
    }
    p.validate();
    return p;
}

inline SurrogateProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoFailure, "cannot open profile file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, "profile JSON parse error in " + path + ": " + e.what());
    }
    return profile_from_json(j);
}

inline void save_profile(const SurrogateProfile& p, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write profile file " + path);
    out << profile_to_json(p).dump(2) << "\n";
}

}  // namespace popsynth
