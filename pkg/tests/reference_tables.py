"""Published reference values, transcribed by hand.

FRAG_TABLE columns: init frags, init last, init avail, resp frags, resp last,
resp avail, PK, CT, init total, resp total, init overhead, resp overhead.
The qkd row is the responder-picks-the-key layout (0-byte request, 16-byte response).
"""

FRAG_TABLE = {
    "x25519": (1, 302, 1212, 1, 335, 1179, 32, 32, 302, 335, 270, 303),
    "ecp256": (1, 334, 1180, 1, 367, 1147, 64, 64, 334, 367, 270, 303),
    "bike1": (2, 331, 1183, 2, 396, 1118, 1541, 1573, 1845, 1910, 304, 337),
    "bike3": (3, 393, 1121, 3, 458, 1056, 3083, 3115, 3421, 3486, 338, 371),
    "frodoa1": (7, 1006, 508, 7, 1143, 371, 9616, 9720, 10090, 10227, 474, 507),
    "frodoa3": (11, 1102, 412, 11, 1247, 267, 15632, 15744, 16242, 16387, 610, 643),
    "frodoa5": (15, 1070, 444, 15, 1215, 299, 21520, 21632, 22266, 22411, 746, 779),
    "frodos1": (7, 1006, 508, 7, 1143, 371, 9616, 9720, 10090, 10227, 474, 507),
    "frodos3": (11, 1102, 412, 11, 1247, 267, 15632, 15744, 16242, 16387, 610, 643),
    "frodos5": (15, 1070, 444, 15, 1215, 299, 21520, 21632, 22266, 22411, 746, 779),
    "hqc1": (2, 1039, 475, 4, 296, 1218, 2249, 4433, 2553, 4838, 304, 405),
    "hqc3": (4, 352, 1162, 7, 401, 1113, 4522, 8978, 4894, 9485, 372, 507),
    "hqc5": (6, 115, 1399, 10, 1404, 110, 7245, 14421, 7685, 15030, 440, 609),
    "kyber1": (1, 1070, 444, 1, 1071, 443, 800, 768, 1070, 1071, 270, 303),
    "kyber3": (1, 1454, 60, 1, 1391, 123, 1184, 1088, 1454, 1391, 270, 303),
    "kyber5": (2, 358, 1156, 2, 391, 1123, 1568, 1568, 1872, 1905, 304, 337),
    "qkd": (1, 270, 1244, 1, 319, 1195, 0, 16, 270, 319, 270, 303),
}

# hybrid QKD + ML-KEM payloads: (client request, client response, server request, server response)
HYBRID_PAYLOADS = {
    "kyber1": (816, 768, 800, 784),
    "kyber3": (1200, 1088, 1184, 1104),
    "kyber5": (1584, 1568, 1568, 1584),
}

# frozen with an independent struct.pack-based expansion in a scratch script
ZERO_SEED_KYBER1_PK_PREFIX = "fa47ac07ab71bdf1dca83f280a7f0687"
ZERO_SEED_KYBER1_PK_SHA256 = "0d74a4f7bb885518412ccfbb2483c94afdfb44e9a059ebb21f9d60c4b938f0a7"
# sha256sum over (that public key || ciphertext from randomness bytes(range(32)))
KYBER1_FIXED_SHARED_SECRET = "8f650a4bc98f568270066ea5b438476c3e4d34475688c932ee1f6b0939c66c7d"
# sha256sum over b"a"*32 + b"b"*32
FINAL_SECRET_AB = "fdd2a64d014f2c406d2ece67c23212a92b356314f4deb42b24c395296ee304d2"
