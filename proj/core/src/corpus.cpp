// Copyright 2026 The asrkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "asrkit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "json.hpp"

#include "asrkit/audio.hpp"
#include "asrkit/error.hpp"
#include "asrkit/metrics.hpp"
#include "asrkit/random.hpp"
#include "asrkit/textnorm.hpp"

namespace asrkit::corpus {
namespace {

std::unordered_set<std::string> sentence_set(const Manifest& m) {
  std::unordered_set<std::string> out;
  for (const auto& u : m.utterances) out.insert(textnorm::normalize_sentence(u.text));
  return out;
}

std::size_t count_to_select(double frac, std::size_t n) {
  if (n == 0 || frac <= 0.0) return 0;
  // The epsilon keeps e.g. 0.05 * 20 from rounding up to 2.
  const double k = std::ceil(frac * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(k, 0.0)));
}

std::string format_hours(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", metrics::round_half_up(h, 1));
  return buf;
}

}  // namespace

std::pair<Manifest, std::size_t> drop_empty(Manifest m) {
  const auto before = m.utterances.size();
  std::erase_if(m.utterances, [](const Utterance& u) { return textnorm::normalize(u.text).empty(); });
  m.sort();
  return {std::move(m), before - m.utterances.size()};
}

std::pair<Manifest, std::size_t> drop_too_long(Manifest m, double max_seconds) {
  const auto before = m.utterances.size();
  std::erase_if(m.utterances,
                [&](const Utterance& u) { return audio::exceeds_max_duration(u.duration_sec, max_seconds); });
  m.sort();
  return {std::move(m), before - m.utterances.size()};
}

SpeakerSplit split_by_speaker(const Manifest& m, double male_frac, double female_frac, std::uint64_t seed) {
  if (m.empty()) throw Error(Errc::NoSpeakers, "cannot split an empty manifest");
  if (male_frac < 0.0 || male_frac > 1.0 || female_frac < 0.0 || female_frac > 1.0) {
    throw Error(Errc::InvalidArgument, "speaker fractions must lie in [0, 1]");
  }
  // A speaker's gender is the first known gender among its utterances.
  std::map<std::string, Gender> speakers;
  for (const auto& u : m.utterances) {
    auto [it, inserted] = speakers.try_emplace(u.speaker_id, u.gender);
    if (!inserted && it->second == Gender::Unknown) it->second = u.gender;
  }
  std::vector<std::string> male, female;
  for (const auto& [s, g] : speakers) {
    if (g == Gender::Male) male.push_back(s);
    if (g == Gender::Female) female.push_back(s);
  }

  Rng rng(seed);
  std::set<std::string> chosen;
  auto pick = [&](std::vector<std::string>& group, double frac) {
    rng.shuffle(std::span<std::string>(group));
    const auto k = count_to_select(frac, group.size());
    chosen.insert(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(k));
  };
  pick(male, male_frac);
  pick(female, female_frac);

  SpeakerSplit out;
  out.train.provenance = m.provenance + " | split train seed=" + std::to_string(seed);
  out.test.provenance = m.provenance + " | split test seed=" + std::to_string(seed);
  for (const auto& u : m.utterances) {
    if (chosen.contains(u.speaker_id)) {
      auto t = u;
      t.subset = Subset::Test;
      out.test.utterances.push_back(std::move(t));
    } else {
      out.train.utterances.push_back(u);
    }
  }
  out.train.sort();
  out.test.sort();
  return out;
}

Manifest augment_common_voice(const Manifest& validated, const Manifest& dev, const Manifest& test) {
  std::set<std::string> tags;
  for (const Manifest* m : {&validated, &dev, &test}) {
    for (const auto& u : m->utterances) tags.insert(u.dataset);
  }
  if (tags.size() > 1) throw Error(Errc::InvalidArgument, "manifests carry different dataset tags");

  std::unordered_set<std::string> held_speakers;
  for (const Manifest* m : {&dev, &test}) {
    for (const auto& u : m->utterances) held_speakers.insert(u.speaker_id);
  }
  auto held_sentences = sentence_set(dev);
  held_sentences.merge(sentence_set(test));

  Manifest out;
  out.provenance = validated.provenance + " | augmented";
  for (const auto& u : validated.utterances) {
    if (held_speakers.contains(u.speaker_id)) continue;
    if (held_sentences.contains(textnorm::normalize_sentence(u.text))) continue;
    auto t = u;
    t.subset = Subset::Train;
    out.utterances.push_back(std::move(t));
  }
  out.sort();
  return out;
}

std::pair<Manifest, std::size_t> filter_test_leakage(Manifest train, std::span<const Manifest> tests) {
  std::unordered_set<std::string> held;
  for (const auto& t : tests) held.merge(sentence_set(t));
  const auto before = train.utterances.size();
  std::erase_if(train.utterances,
                [&](const Utterance& u) { return held.contains(textnorm::normalize_sentence(u.text)); });
  train.sort();
  return {std::move(train), before - train.utterances.size()};
}

std::array<double, 3> SplitReport::totals() const {
  std::array<double, 3> t{0.0, 0.0, 0.0};
  for (const auto& [name, h] : hours) {
    for (std::size_t i = 0; i < 3; ++i) t[i] += h[i];
  }
  return t;
}

std::string SplitReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [name, h] : hours) {
    per[name] = {{"train", h[0]}, {"valid", h[1]}, {"test", h[2]}};
  }
  j["hours"] = per;
  const auto t = totals();
  j["total"] = {{"train", t[0]}, {"valid", t[1]}, {"test", t[2]}};
  j["dropped"] = {{"empty_text", dropped.empty_text},
                  {"missing_audio", dropped.missing_audio},
                  {"too_long", dropped.too_long},
                  {"leakage", dropped.leakage}};
  return j.dump(2);
}

std::string SplitReport::to_table() const {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s\n", "Dataset", "Train", "Valid", "Test");
  out += line;
  auto row = [&](const std::string& name, const std::array<double, 3>& h) {
    std::snprintf(line, sizeof line, "%-12s %8s %8s %8s\n", name.c_str(), format_hours(h[0]).c_str(),
                  format_hours(h[1]).c_str(), format_hours(h[2]).c_str());
    out += line;
  };
  for (const auto& [name, h] : hours) row(metrics::subset_display_name(name), h);
  row("Total", totals());
  std::snprintf(line, sizeof line, "dropped: empty_text=%zu missing_audio=%zu too_long=%zu leakage=%zu\n",
                dropped.empty_text, dropped.missing_audio, dropped.too_long, dropped.leakage);
  out += line;
  return out;
}

SplitReport summarize(std::span<const Manifest> manifests, DroppedCounts dropped) {
  SplitReport r;
  r.dropped = dropped;
  for (const auto& m : manifests) {
    for (const auto& u : m.utterances) {
      auto& h = r.hours[u.dataset];
      h[static_cast<std::size_t>(u.subset)] += u.duration_sec / 3600.0;
    }
  }
  return r;
}

}  // namespace asrkit::corpus
