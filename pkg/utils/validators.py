import re

MAX_DEFINITION_LENGTH = 4000


def is_valid_catalog_name(name: str) -> bool:
    """
    Проверяет, что имя записи каталога состоит из строчных латинских букв,
    цифр и дефисов и имеет длину от 2 до 40 символов.

    Args:
        name: Имя для проверки

    Returns:
        True если имя валидно, иначе False
    """
    if not name or not isinstance(name, str):
        return False

    return bool(re.fullmatch(r"[a-z][a-z0-9\-]{1,39}", name.strip()))


def is_valid_definition(text: str) -> bool:
    """
    Проверяет, что определение энергии непустое и не длиннее MAX_DEFINITION_LENGTH.
    """
    if not text or not isinstance(text, str):
        return False

    return 0 < len(text.strip()) <= MAX_DEFINITION_LENGTH
