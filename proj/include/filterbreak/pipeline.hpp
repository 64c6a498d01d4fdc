#pragma once

// Preprocessor + booster as one fitted unit, with its JSON model document.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "filterbreak/errors.hpp"
#include "filterbreak/features.hpp"
#include "filterbreak/gbdt.hpp"
#include "filterbreak/matrix.hpp"
#include "filterbreak/preprocess.hpp"

namespace filterbreak {

inline constexpr std::string_view kModelFormat = "filterbreak-model";

struct PipelineParams {
  Hyperparams hp;
  double null_threshold = kDefaultNullThreshold;
  double corr_threshold = kDefaultCorrThreshold;

  friend bool operator==(const PipelineParams&, const PipelineParams&) = default;
};

class Classifier {
 public:
  std::vector<std::string> feature_names;  // input columns the preprocessor was fit on
  PreprocessorModel pre;
  GBDTModel model;

  std::vector<double> predict_proba(const Matrix& X) const { return model.predict_proba(pre.transform(X)); }

  std::vector<double> predict_proba(const Dataset& d) const {
    if (d.feature_names != feature_names) throw SchemaMismatch("feature columns differ from the fitted model");
    return predict_proba(d.X);
  }

  std::vector<std::string> kept_names() const {
    std::vector<std::string> out;
    for (auto k : pre.kept) out.push_back(feature_names[k]);
    return out;
  }

  friend bool operator==(const Classifier&, const Classifier&) = default;
};

/// Fits preprocessing and the booster on the given rows only.
inline Classifier fit_classifier(const Dataset& train_set, const PipelineParams& params, unsigned jobs = 1,
                                 const CorrelationTable* correlations = nullptr) {
  Classifier c;
  c.feature_names = train_set.feature_names;
  c.pre = fit_preprocessor(train_set.X, params.null_threshold, params.corr_threshold, correlations);
  c.model = train(c.pre.transform(train_set.X), train_set.labels, params.hp, jobs);
  return c;
}

inline nlohmann::json classifier_to_json(const Classifier& c) {
  nlohmann::json pre = preprocessor_to_json(c.pre);
  pre["kept_names"] = c.kept_names();
  return {{"format", kModelFormat},
          {"schema_version", kFeatureSchemaVersion},
          {"feature_names", c.feature_names},
          {"preprocessor", std::move(pre)},
          {"model", gbdt_to_json(c.model)}};
}

inline Classifier classifier_from_json(const nlohmann::json& j) {
  Classifier c;
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw SchemaError("not a model document");
    if (j.at("schema_version").get<int>() != kFeatureSchemaVersion)
      throw SchemaMismatch("model was built for feature schema v" +
                           std::to_string(j.at("schema_version").get<int>()));
    c.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    c.pre = preprocessor_from_json(j.at("preprocessor"));
    c.model = gbdt_from_json(j.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad model document: ") + e.what());
  }
  if (c.pre.n_input != c.feature_names.size()) throw SchemaError("preprocessor width differs from feature list");
  if (c.model.n_features != c.pre.kept.size()) throw SchemaError("model width differs from kept features");
  return c;
}

inline void save_classifier(const Classifier& c, std::ostream& out) { out << classifier_to_json(c).dump(2) << '\n'; }

inline Classifier load_classifier(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("model is not valid JSON: ") + e.what());
  }
  return classifier_from_json(j);
}

}  // namespace filterbreak
