// include/selfecho/config.h

// Copyright 2026  selfecho authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SELFECHO_CONFIG_H_
#define SELFECHO_CONFIG_H_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "selfecho/griffin_lim.h"
#include "selfecho/psola.h"
#include "selfecho/stft.h"
#include "selfecho/synth.h"
#include "selfecho/trainer.h"

namespace selfecho {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// "key = value" lines; '#' comments and blank lines are skipped.
// ParseError names the line.
KeyValues ParseKeyValues(std::istream &is, const std::string &source = "config");
KeyValues ReadConfigFile(const std::string &path);

// Every tunable default in one place. "seed" and "sample_rate_hz" apply to
// all sections that have them.
struct AppConfig {
  TrainConfig train;
  SynthSpec synth;
  DspConfig dsp;
  GriffinLimOptions griffin_lim;
  PitchOptions pitch;
  int n_test = 162;
  bool deterministic = false;

  // BadConfig on unknown keys, unparsable values or out-of-range results.
  void Apply(const KeyValues &kv);
  void Validate() const;
  // Sets train defaults that depend on the mode (generator kind and
  // discriminator norm follow the mode unless given explicitly).
  void SetMode(TrainMode mode);
  // "key = value" lines for every key, in a stable order.
  std::string ToText() const;
  // One line per key: name, current value, description.
  std::string Help() const;

 private:
  bool generator_explicit_ = false;
};

std::string TrainConfigText(const TrainConfig &config);
TrainConfig ParseTrainConfigText(const std::string &text);

}  // namespace selfecho

#endif  // SELFECHO_CONFIG_H_
