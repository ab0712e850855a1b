from dependency_translator.decoder import Decoder, decode, rescore_reverse

__all__ = ["Decoder", "decode", "rescore_reverse"]
