#include "geosim/repl/redo.h"

#include <cstring>

namespace geosim {

namespace {

constexpr const char* kKindNames[] = {"write",  "pending_commit", "commit",
                                      "prepare", "commit_prepared", "abort",
                                      "abort_prepared", "ddl", "heartbeat"};

template <typename T>
void Put(std::string& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutBytes(std::string& out, std::string_view s) {
  Put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<uint8_t>(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  std::string GetBytes() {
    uint32_t n = Get<uint32_t>();
    Need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  size_t pos() const { return pos_; }

 private:
  void Need(size_t n) const {
    if (pos_ + n > in_.size()) throw RedoDecodeError("truncated redo record");
  }

  std::string_view in_;
  size_t pos_ = 0;
};

}  // namespace

const char* RedoKindName(RedoKind kind) {
  auto i = static_cast<size_t>(kind);
  return i < std::size(kKindNames) ? kKindNames[i] : "?";
}

RedoKind ParseRedoKind(const std::string& name) {
  for (size_t i = 0; i < std::size(kKindNames); ++i)
    if (name == kKindNames[i]) return static_cast<RedoKind>(i);
  throw std::invalid_argument("unknown redo kind: " + name);
}

std::string EncodeRecord(const RedoRecord& r) {
  std::string body;
  Put<uint64_t>(body, r.lsn);
  Put<uint8_t>(body, static_cast<uint8_t>(r.kind));
  Put<uint64_t>(body, r.txn);
  Put<uint64_t>(body, r.commit_ts.value);
  Put<uint32_t>(body, static_cast<uint32_t>(r.keys.size()));
  for (const auto& k : r.keys) PutBytes(body, k);
  Put<uint32_t>(body, r.commit_ts.coordinator);
  Put<uint64_t>(body, r.commit_ts.local_seq);
  Put<uint64_t>(body, r.commit_ts.err);
  Put<uint8_t>(body, static_cast<uint8_t>(r.commit_ts.mode));
  PutBytes(body, r.payload);
  std::string out;
  out.reserve(body.size() + 4);
  Put<uint32_t>(out, static_cast<uint32_t>(body.size()));
  out += body;
  return out;
}

RedoRecord DecodeRecord(std::string_view bytes, size_t* consumed) {
  Reader prefix(bytes);
  uint32_t len = prefix.Get<uint32_t>();
  if (bytes.size() < 4 + static_cast<size_t>(len)) throw RedoDecodeError("truncated redo record");
  Reader rd(bytes.substr(4, len));
  RedoRecord r;
  r.lsn = rd.Get<uint64_t>();
  uint8_t kind = rd.Get<uint8_t>();
  if (kind >= std::size(kKindNames)) throw RedoDecodeError("bad redo kind " + std::to_string(kind));
  r.kind = static_cast<RedoKind>(kind);
  r.txn = rd.Get<uint64_t>();
  r.commit_ts.value = rd.Get<uint64_t>();
  uint32_t nkeys = rd.Get<uint32_t>();
  for (uint32_t i = 0; i < nkeys; ++i) r.keys.push_back(rd.GetBytes());
  r.commit_ts.coordinator = rd.Get<uint32_t>();
  r.commit_ts.local_seq = rd.Get<uint64_t>();
  r.commit_ts.err = rd.Get<uint64_t>();
  uint8_t mode = rd.Get<uint8_t>();
  if (mode > 2) throw RedoDecodeError("bad timestamp mode " + std::to_string(mode));
  r.commit_ts.mode = static_cast<TsMode>(mode);
  r.payload = rd.GetBytes();
  if (rd.pos() != len) throw RedoDecodeError("trailing bytes in redo record");
  if (consumed) *consumed = 4 + len;
  return r;
}

size_t EncodedSize(const RedoRecord& r) {
  size_t n = 4 + 8 + 1 + 8 + 8 + 4 + 4 + 8 + 8 + 1 + 4 + r.payload.size();
  for (const auto& k : r.keys) n += 4 + k.size();
  return n;
}

std::string DescribeRecord(const RedoRecord& r) {
  std::string s = "#" + std::to_string(r.lsn) + " " + RedoKindName(r.kind) + " txn=" +
                  std::to_string(r.txn);
  if (r.carries_commit_ts()) s += " ts=" + r.commit_ts.ToString();
  if (!r.keys.empty()) {
    s += " keys=";
    for (size_t i = 0; i < r.keys.size(); ++i) s += (i ? "," : "") + r.keys[i];
  }
  return s;
}

}  // namespace geosim
