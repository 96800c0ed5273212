# Pacote de testes para o serviço de elegibilidade 