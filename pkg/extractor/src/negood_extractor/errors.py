class ExtractorError(Exception):
    code = "internal"
    exit_code = 4


class ConfigInvalid(ExtractorError):
    code = "config-invalid"
    exit_code = 2


class ModelLoadError(ExtractorError):
    code = "model-load-error"
    exit_code = 2


class EncodeError(ExtractorError):
    code = "encode-error"
    exit_code = 4


class ImageDecodeError(ExtractorError):
    code = "image-decode-error"
    exit_code = 2


class DatabaseMissing(ExtractorError):
    code = "database-missing"
    exit_code = 2


class IoFailure(ExtractorError):
    code = "io-failure"
    exit_code = 3
