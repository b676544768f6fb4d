// Copyright 2026 The Distributed HDMM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DHDMM_SECAGG_CRYPTO_H_
#define DHDMM_SECAGG_CRYPTO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "dhdmm/fieldcodec/field.h"
#include "dhdmm/random.h"

namespace dhdmm::secagg {

// Pseudorandom vector over [0, p) from a 32-byte seed: a ChaCha20 keystream
// with rejection sampling, so both endpoints of a pair derive the same mask.
fieldcodec::EncodedVector PrgExpand(const Seed32& seed, size_t k, uint64_t p);

enum class SuiteKind { kStandard, kInsecureFast };

struct KeyPair {
  std::string public_key;
  std::string secret_key;
};

// The primitives secure aggregation needs. kStandard uses X25519, Ed25519,
// BLAKE2b, ChaCha20-Poly1305 and ChaCha20. kInsecureFast is a deterministic
// stand-in with the same algebra for large simulations; it offers no
// security and its keys are tiny.
class CryptoSuite {
 public:
  virtual ~CryptoSuite() = default;

  virtual const char* name() const = 0;
  // Length of key-agreement secret keys and self-mask seeds.
  virtual size_t secret_bytes() const = 0;

  virtual KeyPair AgreementKeyPair(Rng& rng) const = 0;
  virtual absl::StatusOr<std::string> Agree(std::string_view secret_key,
                                            std::string_view peer_public) const = 0;

  virtual KeyPair SigningKeyPair(Rng& rng) const = 0;
  // 64-byte signature.
  virtual std::string Sign(std::string_view secret_key,
                           std::string_view message) const = 0;
  virtual bool Verify(std::string_view public_key, std::string_view message,
                      std::string_view signature) const = 0;

  virtual Seed32 Kdf(std::string_view label, std::string_view input) const = 0;

  virtual std::string Seal(const Seed32& key, uint64_t nonce,
                           std::string_view plaintext) const = 0;
  virtual absl::StatusOr<std::string> Open(const Seed32& key, uint64_t nonce,
                                           std::string_view ciphertext) const = 0;

  virtual fieldcodec::EncodedVector Expand(std::string_view seed, size_t k,
                                           uint64_t p) const = 0;
};

const CryptoSuite& GetSuite(SuiteKind kind);

}  // namespace dhdmm::secagg

#endif  // DHDMM_SECAGG_CRYPTO_H_
