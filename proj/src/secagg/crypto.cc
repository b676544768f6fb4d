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

#include "dhdmm/secagg/crypto.h"

#include <sodium.h>

#include <bit>
#include <cstring>

#include "dhdmm/bytes.h"
#include "dhdmm/status.h"

namespace dhdmm::secagg {
namespace {

uint64_t MaskFor(uint64_t p) {
  int bits = std::bit_width(p - 1);
  return bits >= 64 ? ~uint64_t{0} : (uint64_t{1} << bits) - 1;
}

absl::Status CryptoError(const std::string& what) {
  return MakeError(ErrorKind::kRecoveryFailure, what);
}

std::string RandomBytes(Rng& rng, size_t n) {
  std::string out(n, '\0');
  rng.Fill({reinterpret_cast<uint8_t*>(out.data()), n});
  return out;
}

class StandardSuite : public CryptoSuite {
 public:
  const char* name() const override { return "standard"; }
  size_t secret_bytes() const override { return 32; }

  KeyPair AgreementKeyPair(Rng& rng) const override {
    KeyPair kp;
    kp.secret_key = RandomBytes(rng, crypto_scalarmult_SCALARBYTES);
    kp.public_key.resize(crypto_scalarmult_BYTES);
    crypto_scalarmult_base(reinterpret_cast<uint8_t*>(kp.public_key.data()),
                           reinterpret_cast<const uint8_t*>(kp.secret_key.data()));
    return kp;
  }

  absl::StatusOr<std::string> Agree(std::string_view secret_key,
                                    std::string_view peer_public) const override {
    if (secret_key.size() != crypto_scalarmult_SCALARBYTES ||
        peer_public.size() != crypto_scalarmult_BYTES) {
      return CryptoError("malformed key-agreement key");
    }
    std::string shared(crypto_scalarmult_BYTES, '\0');
    if (crypto_scalarmult(reinterpret_cast<uint8_t*>(shared.data()),
                          reinterpret_cast<const uint8_t*>(secret_key.data()),
                          reinterpret_cast<const uint8_t*>(peer_public.data())) != 0) {
      return CryptoError("degenerate key-agreement public key");
    }
    return shared;
  }

  KeyPair SigningKeyPair(Rng& rng) const override {
    Seed32 seed = rng.NextSeed();
    KeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(reinterpret_cast<uint8_t*>(kp.public_key.data()),
                             reinterpret_cast<uint8_t*>(kp.secret_key.data()),
                             seed.data());
    return kp;
  }

  std::string Sign(std::string_view secret_key,
                   std::string_view message) const override {
    std::string sig(crypto_sign_BYTES, '\0');
    crypto_sign_detached(reinterpret_cast<uint8_t*>(sig.data()), nullptr,
                         reinterpret_cast<const uint8_t*>(message.data()),
                         message.size(),
                         reinterpret_cast<const uint8_t*>(secret_key.data()));
    return sig;
  }

  bool Verify(std::string_view public_key, std::string_view message,
              std::string_view signature) const override {
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES ||
        signature.size() != crypto_sign_BYTES) {
      return false;
    }
    return crypto_sign_verify_detached(
               reinterpret_cast<const uint8_t*>(signature.data()),
               reinterpret_cast<const uint8_t*>(message.data()), message.size(),
               reinterpret_cast<const uint8_t*>(public_key.data())) == 0;
  }

  Seed32 Kdf(std::string_view label, std::string_view input) const override {
    return HashToSeed({AsBytes(label), AsBytes(input)});
  }

  std::string Seal(const Seed32& key, uint64_t nonce,
                   std::string_view plaintext) const override {
    uint8_t iv[crypto_aead_chacha20poly1305_ietf_NPUBBYTES] = {};
    std::memcpy(iv, &nonce, sizeof(nonce));
    std::string out(plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES, '\0');
    unsigned long long out_len = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(
        reinterpret_cast<uint8_t*>(out.data()), &out_len,
        reinterpret_cast<const uint8_t*>(plaintext.data()), plaintext.size(),
        nullptr, 0, nullptr, iv, key.data());
    out.resize(out_len);
    return out;
  }

  absl::StatusOr<std::string> Open(const Seed32& key, uint64_t nonce,
                                   std::string_view ciphertext) const override {
    if (ciphertext.size() < crypto_aead_chacha20poly1305_ietf_ABYTES) {
      return CryptoError("ciphertext too short");
    }
    uint8_t iv[crypto_aead_chacha20poly1305_ietf_NPUBBYTES] = {};
    std::memcpy(iv, &nonce, sizeof(nonce));
    std::string out(ciphertext.size(), '\0');
    unsigned long long out_len = 0;
    if (crypto_aead_chacha20poly1305_ietf_decrypt(
            reinterpret_cast<uint8_t*>(out.data()), &out_len, nullptr,
            reinterpret_cast<const uint8_t*>(ciphertext.data()),
            ciphertext.size(), nullptr, 0, iv, key.data()) != 0) {
      return CryptoError("share ciphertext failed authentication");
    }
    out.resize(out_len);
    return out;
  }

  fieldcodec::EncodedVector Expand(std::string_view seed, size_t k,
                                   uint64_t p) const override {
    Seed32 key{};
    std::memcpy(key.data(), seed.data(), std::min(seed.size(), key.size()));
    return PrgExpand(key, k, p);
  }
};

// SplitMix64 finalizer.
uint64_t Mix(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t MixBytes(uint64_t h, std::string_view data) {
  for (size_t i = 0; i < data.size(); i += 8) {
    uint64_t word = 0;
    std::memcpy(&word, data.data() + i, std::min<size_t>(8, data.size() - i));
    h = Mix(h ^ word ^ (static_cast<uint64_t>(data.size()) << 56));
  }
  return Mix(h ^ data.size());
}

uint64_t LoadU64(std::string_view s) {
  uint64_t v = 0;
  std::memcpy(&v, s.data(), std::min<size_t>(8, s.size()));
  return v;
}

std::string StoreU64(uint64_t v) {
  std::string out(8, '\0');
  std::memcpy(out.data(), &v, 8);
  return out;
}

class InsecureFastSuite : public CryptoSuite {
 public:
  static constexpr uint64_t kGenerator = 3;

  const char* name() const override { return "insecure-fast"; }
  size_t secret_bytes() const override { return 7; }

  KeyPair AgreementKeyPair(Rng& rng) const override {
    uint64_t sk = 1 + rng.UniformBelow((uint64_t{1} << 56) - 1);
    KeyPair kp;
    kp.secret_key = StoreU64(sk).substr(0, 7);
    kp.public_key = StoreU64(fieldcodec::ModMul(kGenerator, sk, fieldcodec::kMersenne61));
    return kp;
  }

  absl::StatusOr<std::string> Agree(std::string_view secret_key,
                                    std::string_view peer_public) const override {
    if (secret_key.size() != 7 || peer_public.size() != 8) {
      return CryptoError("malformed key-agreement key");
    }
    uint64_t peer = LoadU64(peer_public);
    if (peer == 0 || peer >= fieldcodec::kMersenne61) {
      return CryptoError("degenerate key-agreement public key");
    }
    return StoreU64(
        fieldcodec::ModMul(peer, LoadU64(secret_key), fieldcodec::kMersenne61));
  }

  KeyPair SigningKeyPair(Rng& rng) const override {
    KeyPair kp;
    kp.secret_key = RandomBytes(rng, 32);
    kp.public_key = kp.secret_key;
    return kp;
  }

  std::string Sign(std::string_view secret_key,
                   std::string_view message) const override {
    std::string sig(64, '\0');
    crypto_generichash(reinterpret_cast<uint8_t*>(sig.data()), sig.size(),
                       reinterpret_cast<const uint8_t*>(message.data()),
                       message.size(),
                       reinterpret_cast<const uint8_t*>(secret_key.data()),
                       secret_key.size());
    return sig;
  }

  bool Verify(std::string_view public_key, std::string_view message,
              std::string_view signature) const override {
    return signature.size() == 64 &&
           sodium_memcmp(Sign(public_key, message).data(), signature.data(),
                         64) == 0;
  }

  Seed32 Kdf(std::string_view label, std::string_view input) const override {
    uint64_t h = MixBytes(MixBytes(0x6b6466, label), input);
    Seed32 out;
    for (int i = 0; i < 4; ++i) {
      h = Mix(h + i);
      std::memcpy(out.data() + 8 * i, &h, 8);
    }
    return out;
  }

  std::string Seal(const Seed32& key, uint64_t nonce,
                   std::string_view plaintext) const override {
    std::string out;
    out.reserve(plaintext.size() + 8);
    out.assign(plaintext);
    uint64_t state = LoadU64({reinterpret_cast<const char*>(key.data()), 8}) ^
                     Mix(nonce);
    Xor(out, state);
    uint64_t tag = MixBytes(state, out);
    out.append(reinterpret_cast<const char*>(&tag), 8);
    return out;
  }

  absl::StatusOr<std::string> Open(const Seed32& key, uint64_t nonce,
                                   std::string_view ciphertext) const override {
    if (ciphertext.size() < 8) return CryptoError("ciphertext too short");
    uint64_t state = LoadU64({reinterpret_cast<const char*>(key.data()), 8}) ^
                     Mix(nonce);
    std::string_view body = ciphertext.substr(0, ciphertext.size() - 8);
    if (LoadU64(ciphertext.substr(body.size())) != MixBytes(state, body)) {
      return CryptoError("share ciphertext failed authentication");
    }
    std::string out(body);
    Xor(out, state);
    return out;
  }

  fieldcodec::EncodedVector Expand(std::string_view seed, size_t k,
                                   uint64_t p) const override {
    uint64_t state = MixBytes(0x707267, seed);
    const uint64_t mask = MaskFor(p);
    fieldcodec::EncodedVector out;
    out.elements.reserve(k);
    while (out.elements.size() < k) {
      state += 0x9e3779b97f4a7c15ull;
      uint64_t v = Mix(state) & mask;
      if (v < p) out.elements.push_back(v);
    }
    return out;
  }

 private:
  static void Xor(std::string& data, uint64_t state) {
    for (size_t i = 0; i < data.size(); i += 8) {
      uint64_t pad = Mix(state + i);
      for (size_t b = 0; b < 8 && i + b < data.size(); ++b) {
        data[i + b] ^= static_cast<char>(pad >> (8 * b));
      }
    }
  }
};

}  // namespace

fieldcodec::EncodedVector PrgExpand(const Seed32& seed, size_t k, uint64_t p) {
  Rng stream(seed, /*stream=*/0x6d61736b);
  const uint64_t mask = MaskFor(p);
  fieldcodec::EncodedVector out;
  out.elements.reserve(k);
  while (out.elements.size() < k) {
    uint64_t v = stream() & mask;
    if (v < p) out.elements.push_back(v);
  }
  return out;
}

const CryptoSuite& GetSuite(SuiteKind kind) {
  static const StandardSuite* standard = new StandardSuite();
  static const InsecureFastSuite* fast = new InsecureFastSuite();
  if (kind == SuiteKind::kStandard) return *standard;
  return *fast;
}

}  // namespace dhdmm::secagg
