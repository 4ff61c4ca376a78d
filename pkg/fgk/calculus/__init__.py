"""形式計算のコア（多項式・形式関数・作用素・スター積・亜群・語計算・コヒーレント族）"""
