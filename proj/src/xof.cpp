#include "hmh/xof.hpp"

#include <openssl/evp.h>

#include <memory>

#include "hmh/errors.hpp"

namespace hmh {

namespace {

struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

const EVP_MD* shake256_md() {
    static const EVP_MD* md = EVP_shake256();
    return md;
}

}  // namespace

Bytes shake256(BytesView input, std::size_t out_len) {
    // One context per thread; re-initialized per call.
    static thread_local CtxPtr ctx(EVP_MD_CTX_new());
    Bytes out(out_len);
    bool ok = EVP_DigestInit_ex(ctx.get(), shake256_md(), nullptr) != 0;
    if (ok && !input.empty()) ok = EVP_DigestUpdate(ctx.get(), input.data(), input.size()) != 0;
    if (ok) ok = EVP_DigestFinalXOF(ctx.get(), out.data(), out.size()) != 0;
    if (!ok) raise(ErrorCode::Config, "SHAKE-256 evaluation failed");
    return out;
}

Bytes xof(XofId id, BytesView input, std::size_t out_len) {
    switch (id) {
        case XofId::Shake256:
            return shake256(input, out_len);
    }
    raise(ErrorCode::Config, "unknown xof id");
}

}  // namespace hmh
