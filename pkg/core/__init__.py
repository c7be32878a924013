"""
Численное ядро slconvex: линейная алгебра 2x2, представления энергий,
парсер выражений, критерии выпуклости на SL(2) и изохорный подъем в GL+(2).
"""
