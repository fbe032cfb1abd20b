#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "hmh/protocol.hpp"

// On-disk state directory layout shared by the CLI commands.
//
//   <dir>/pp.json        public parameters (immutable after init)
//   <dir>/secret.key     distributor signing key, HMHKEY01 format
//   <dir>/public.key     verification key, HMHKEY01 format
//   <dir>/CURRENT        name of the live generation directory
//   <dir>/gen-<G>/       one complete, immutable state generation:
//       db.tsv           row fixture: "index<TAB>base64(payload)" lines
//       log.tsv          delta log lines (distributor only)
//       signed.tsv       "version<TAB>base64(signature)" lines, v0 + retained
//       current.signed   base64 SignedDigest wire form, one line
//       current.hmh      self-describing digest file
//       meta.json        {"version", "floor", "role"}
//
// Mutating commands build gen-<G+1> completely, then atomically rename a new
// CURRENT over the old one; a killed process leaves the previous generation
// intact. The .lock file serializes mutators.

namespace hmh::cli {

namespace fs = std::filesystem;

/// Create-exclusive lock file, removed on destruction.
class LockFile {
  public:
    explicit LockFile(const fs::path& state_dir);
    ~LockFile();
    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

  private:
    fs::path path_;
};

struct Meta {
    std::uint64_t version = 0;
    std::uint64_t floor = 0;
    std::string role;
};

void write_pp_file(const fs::path& dir, const PublicParameters& pp);
PublicParameters read_pp_file(const fs::path& dir);

bool is_initialized(const fs::path& dir);
std::uint64_t read_current_gen(const fs::path& dir);
fs::path gen_path(const fs::path& dir, std::uint64_t gen);
fs::path current_gen_path(const fs::path& dir);

/// Flips CURRENT to `gen` (write-then-rename) and prunes older generations.
void commit_generation(const fs::path& dir, std::uint64_t gen);

void write_meta(const fs::path& gen_dir, const Meta& meta);
Meta read_meta(const fs::path& gen_dir);

void write_signature_table(const fs::path& path, const std::map<std::uint64_t, Bytes>& sigs);
std::map<std::uint64_t, Bytes> read_signature_table(const fs::path& path);

void write_delta_log(const fs::path& path, const UpdateLog& log);
std::vector<UpdateDelta> read_delta_log(const fs::path& path);

void write_signed_digest_file(const fs::path& path, const SignedDigest& sd);
SignedDigest read_signed_digest_file(const fs::path& path, const Params& params);

/// Everything a distributor generation holds, parsed.
struct DistributorFiles {
    Database db;
    SignedDigest current;
    Bytes genesis_signature;
    UpdateLog log;
    Meta meta;
};
DistributorFiles read_distributor_files(const fs::path& dir, const PublicParameters& pp);

/// Log, signatures and head only; skips the row fixture. Enough to serve a
/// sync that stays within the retained log range.
struct DistributorLogFiles {
    SignedDigest current;
    Bytes genesis_signature;
    UpdateLog log;
    Meta meta;
};
DistributorLogFiles read_distributor_log_files(const fs::path& dir, const PublicParameters& pp);

/// Writes a complete distributor generation (does not flip CURRENT).
void write_distributor_gen(const fs::path& dir, std::uint64_t gen, const Database& db,
                           const SignedDigest& current, const Bytes& genesis_signature,
                           const UpdateLog& log);

struct SubscriberFiles {
    Database db;
    SignedDigest last;
    Meta meta;
};
SubscriberFiles read_subscriber_files(const fs::path& dir, const PublicParameters& pp);

void write_subscriber_gen(const fs::path& dir, std::uint64_t gen, const Database& db,
                          const SignedDigest& last);

}  // namespace hmh::cli
