from utils.collection_utils import key_prefix


def build_key():
    return key_prefix
