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

#include "asrkit/error.hpp"

namespace asrkit {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::TruncatedData: return "TruncatedData";
    case Errc::MissingTranscript: return "MissingTranscript";
    case Errc::UnreadableAudio: return "UnreadableAudio";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::NoSpeakers: return "NoSpeakers";
    case Errc::MalformedManifest: return "MalformedManifest";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::MissingEnd: return "MissingEnd";
    case Errc::NoUnkToken: return "NoUnkToken";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::LabelOutOfVocab: return "LabelOutOfVocab";
    case Errc::InfeasibleTarget: return "InfeasibleTarget";
    case Errc::MalformedLattice: return "MalformedLattice";
    case Errc::ClipTooShort: return "ClipTooShort";
    case Errc::NoMaskedFrames: return "NoMaskedFrames";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::MalformedCheckpoint: return "MalformedCheckpoint";
    case Errc::EmptyReference: return "EmptyReference";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace asrkit
