#include <doctest.h>

#include <string>

#include "zkcraft/sha256.hpp"

using namespace zkcraft;

TEST_CASE("empty string digest") {
  Digest d = sha256("");
  CHECK(hex_digest(d) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(trunc64(d) == 0xE3B0C44298FC1C14ull);
}

TEST_CASE("abc digest") {
  CHECK(hex_digest(sha256("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("two-block message") {
  std::string msg = "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq";
  CHECK(hex_digest(sha256(msg)) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("million a's streamed") {
  Sha256 h;
  std::string chunk(1000, 'a');
  for (int i = 0; i < 1000; ++i) h.update(chunk);
  CHECK(hex_digest(h.finish()) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("incremental equals one-shot across split points") {
  std::string msg;
  for (int i = 0; i < 300; ++i) msg.push_back(char('A' + i % 23));
  Digest whole = sha256(msg);
  for (std::size_t split : {1u, 55u, 56u, 63u, 64u, 65u, 120u, 299u}) {
    Sha256 h;
    h.update(msg.substr(0, split));
    h.update(msg.substr(split));
    CHECK(h.finish() == whole);
  }
}
