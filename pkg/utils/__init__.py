"""
Утилиты slconvex.

Модули:
- timing: Замеры длительности этапов анализа и счетчики вычислений энергии
- validators: Проверки аргументов командной строки
"""

__all__ = ['timing', 'validators']
