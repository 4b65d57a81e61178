"""Log-service side: durable record store, account state, HTTP front end."""
